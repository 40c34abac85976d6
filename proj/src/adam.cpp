#include <cmath>
#include <cstring>
#include <fstream>

#include "fsgs/adam.hpp"

namespace fsgs {

namespace {

constexpr float kBeta1 = 0.9f;
constexpr float kBeta2 = 0.999f;
constexpr float kEps = 1e-15f;

void filter_append(std::vector<float>& buf, const MutationRecord& rec, int stride) {
  if (!rec.keep.empty()) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < rec.keep.size(); ++i) {
      if (!rec.keep[i]) continue;
      for (int c = 0; c < stride; ++c) buf[w * stride + c] = buf[i * stride + c];
      ++w;
    }
    buf.resize(w * stride);
  }
  buf.insert(buf.end(), rec.appended * stride, 0.f);
}

void adam_group(std::vector<float>& m, std::vector<float>& v, float* params,
                const float* grads, std::size_t n, float lr, float bc1, float bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    float g = grads[i];
    m[i] = kBeta1 * m[i] + (1.f - kBeta1) * g;
    v[i] = kBeta2 * v[i] + (1.f - kBeta2) * g * g;
    float mhat = m[i] / bc1;
    float vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
  }
}

}  // namespace

void OptimizerState::resize(std::size_t n) {
  count_ = n;
  m_mu_.assign(n * 3, 0.f);
  v_mu_.assign(n * 3, 0.f);
  m_sh_.assign(n * 3 * kShCoeffCount, 0.f);
  v_sh_.assign(n * 3 * kShCoeffCount, 0.f);
  m_op_.assign(n, 0.f);
  v_op_.assign(n, 0.f);
  m_sc_.assign(n * 3, 0.f);
  v_sc_.assign(n * 3, 0.f);
  m_rot_.assign(n * 4, 0.f);
  v_rot_.assign(n * 4, 0.f);
}

void OptimizerState::apply_mutation(const MutationRecord& rec) {
  filter_append(m_mu_, rec, 3);
  filter_append(v_mu_, rec, 3);
  filter_append(m_sh_, rec, 3 * kShCoeffCount);
  filter_append(v_sh_, rec, 3 * kShCoeffCount);
  filter_append(m_op_, rec, 1);
  filter_append(v_op_, rec, 1);
  filter_append(m_sc_, rec, 3);
  filter_append(v_sc_, rec, 3);
  filter_append(m_rot_, rec, 4);
  filter_append(v_rot_, rec, 4);
  count_ = m_op_.size();
}

void OptimizerState::reset_opacity_moments() {
  std::fill(m_op_.begin(), m_op_.end(), 0.f);
  std::fill(v_op_.begin(), v_op_.end(), 0.f);
}

void OptimizerState::adam_update(GaussianSet& set, const GradientBufferT<float>& grads,
                                 const GroupLearningRates& lrs) {
  if (set.size() != count_ || grads.opacity_logit.size() != count_)
    throw InvalidParameter("adam_update: state/set/gradient size mismatch");
  ++step_;
  float bc1 = 1.f - std::pow(kBeta1, float(step_));
  float bc2 = 1.f - std::pow(kBeta2, float(step_));
  if (count_ == 0) return;

  // Eigen fixed vectors are contiguous, so the SoA columns alias flat arrays.
  adam_group(m_mu_, v_mu_, set.mu[0].data(), grads.mu[0].data(), count_ * 3,
             lrs.position, bc1, bc2);
  adam_group(m_sh_, v_sh_, set.sh[0].data(), grads.sh[0].data(),
             count_ * 3 * kShCoeffCount, lrs.sh, bc1, bc2);
  adam_group(m_op_, v_op_, set.opacity_logit.data(), grads.opacity_logit.data(),
             count_, lrs.opacity, bc1, bc2);
  adam_group(m_sc_, v_sc_, set.log_scale[0].data(), grads.log_scale[0].data(),
             count_ * 3, lrs.scale, bc1, bc2);
  adam_group(m_rot_, v_rot_, set.rotation[0].data(), grads.rotation[0].data(),
             count_ * 4, lrs.rotation, bc1, bc2);
}

namespace {

constexpr char kSidecarMagic[8] = {'F', 'S', 'G', 'S', 'O', 'P', 'T', '\x01'};

void write_vec(std::ofstream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size()) * 4);
}

void read_vec(std::ifstream& in, std::vector<float>& v, std::size_t n) {
  v.resize(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n) * 4))
    throw InvalidParameter("optimizer sidecar: truncated file");
}

}  // namespace

void OptimizerState::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidParameter("optimizer sidecar: cannot open " + path);
  out.write(kSidecarMagic, 8);
  std::uint64_t count = count_, step = std::uint64_t(step_);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(&step), 8);
  for (const auto* v : {&m_mu_, &v_mu_, &m_sh_, &v_sh_, &m_op_, &v_op_, &m_sc_,
                        &v_sc_, &m_rot_, &v_rot_})
    write_vec(out, *v);
  if (!out) throw InvalidParameter("optimizer sidecar: write failed for " + path);
}

OptimizerState OptimizerState::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("optimizer sidecar: cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kSidecarMagic, 8) != 0)
    throw InvalidParameter("optimizer sidecar: bad magic in " + path);
  std::uint64_t count, step;
  in.read(reinterpret_cast<char*>(&count), 8);
  in.read(reinterpret_cast<char*>(&step), 8);
  OptimizerState st;
  st.count_ = count;
  st.step_ = long(step);
  for (auto* v : {&st.m_mu_, &st.v_mu_}) read_vec(in, *v, count * 3);
  for (auto* v : {&st.m_sh_, &st.v_sh_}) read_vec(in, *v, count * 3 * kShCoeffCount);
  for (auto* v : {&st.m_op_, &st.v_op_}) read_vec(in, *v, count);
  for (auto* v : {&st.m_sc_, &st.v_sc_}) read_vec(in, *v, count * 3);
  for (auto* v : {&st.m_rot_, &st.v_rot_}) read_vec(in, *v, count * 4);
  return st;
}

float position_lr_at(float lr0, float lr_final, long iter, long total_iters) {
  if (total_iters <= 0) return lr0;
  double t = std::clamp(double(iter) / double(total_iters), 0.0, 1.0);
  return float(lr0 * std::pow(double(lr_final) / double(lr0), t));
}

}  // namespace fsgs
