#include "memrouter/router.hpp"

#include <cmath>

#include "memrouter/digest.hpp"
#include "memrouter/error.hpp"
#include "memrouter/rng.hpp"

namespace memrouter {

namespace {

constexpr std::string_view kMagic = "MRRTR1";

Eigen::Index ix(std::size_t n) { return static_cast<Eigen::Index>(n); }

void glorot(Matrix& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

std::size_t RouterDims::projection_count() const noexcept {
  return input * hidden + hidden + 2 * hidden + hidden * model + model;
}

std::size_t RouterDims::head_count() const noexcept {
  return model * kNumOps + kNumOps + model * kNumContentTypes + kNumContentTypes;
}

std::size_t RouterDims::parameter_count() const noexcept {
  return projection_count() + head_count();
}

RouterParams RouterParams::zeros(const RouterDims& dims) {
  RouterParams p;
  p.dims = dims;
  const auto d = ix(dims.input), h = ix(dims.hidden), m = ix(dims.model);
  p.w1 = Matrix::Zero(d, h);
  p.b1 = Matrix::Zero(1, h);
  p.ln_gain = Matrix::Ones(1, h);
  p.ln_bias = Matrix::Zero(1, h);
  p.w2 = Matrix::Zero(h, m);
  p.b2 = Matrix::Zero(1, m);
  p.w_op = Matrix::Zero(m, ix(kNumOps));
  p.b_op = Matrix::Zero(1, ix(kNumOps));
  p.w_type = Matrix::Zero(m, ix(kNumContentTypes));
  p.b_type = Matrix::Zero(1, ix(kNumContentTypes));
  return p;
}

RouterParams RouterParams::initialize(const RouterDims& dims, std::uint64_t seed) {
  auto p = zeros(dims);
  Rng rng(seed);
  glorot(p.w1, rng);
  glorot(p.w2, rng);
  glorot(p.w_op, rng);
  glorot(p.w_type, rng);
  p.round_to_float();
  return p;
}

std::array<Matrix*, RouterParams::kNumTensors> RouterParams::tensors() {
  return {&w1, &b1, &ln_gain, &ln_bias, &w2, &b2, &w_op, &b_op, &w_type, &b_type};
}

std::array<const Matrix*, RouterParams::kNumTensors> RouterParams::tensors() const {
  return {&w1, &b1, &ln_gain, &ln_bias, &w2, &b2, &w_op, &b_op, &w_type, &b_type};
}

std::array<const char*, RouterParams::kNumTensors> RouterParams::tensor_names() {
  return {"w1", "b1", "ln_gain", "ln_bias", "w2", "b2", "w_op", "b_op", "w_type", "b_type"};
}

bool RouterParams::all_finite() const {
  for (const auto* t : tensors()) {
    if (!t->allFinite()) return false;
  }
  return true;
}

void RouterParams::round_to_float() {
  for (auto* t : tensors()) {
    *t = t->unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  }
}

bool RouterParams::operator==(const RouterParams& other) const {
  if (!(dims == other.dims)) return false;
  auto a = tensors();
  auto b = other.tensors();
  for (std::size_t i = 0; i < kNumTensors; ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) {
      return false;
    }
  }
  return true;
}

std::size_t parameter_count(const RouterParams& params) {
  std::size_t n = 0;
  for (const auto* t : params.tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

Matrix project(const RouterParams& p, const Matrix& e, ProjectionTrace* trace) {
  if (static_cast<std::size_t>(e.cols()) != p.dims.input) {
    throw DimensionError("project: expected " + std::to_string(p.dims.input) +
                         " columns, got " + std::to_string(e.cols()));
  }
  Matrix a = e * p.w1;
  a.rowwise() += p.b1.row(0);
  Vector rstd;
  Matrix normed = layer_norm_rows(a, rstd);
  Matrix y = (normed.array().rowwise() * p.ln_gain.row(0).array()).matrix();
  y.rowwise() += p.ln_bias.row(0);
  Matrix g = y.unaryExpr([](double v) { return gelu(v); });
  Matrix h = g * p.w2;
  h.rowwise() += p.b2.row(0);
  require_finite(h, "projection activation");
  if (trace) {
    trace->input = e;
    trace->normed = std::move(normed);
    trace->rstd = std::move(rstd);
    trace->pre_gelu = std::move(y);
    trace->activated = std::move(g);
  }
  return h;
}

HeadLogits head_logits(const RouterParams& p, const RowVector& z) {
  if (static_cast<std::size_t>(z.size()) != p.dims.model) {
    throw DimensionError("classify: expected z of length " + std::to_string(p.dims.model));
  }
  if (!z.allFinite()) throw NumericError("classify: non-finite representation");
  HeadLogits out{z * p.w_op + p.b_op.row(0), z * p.w_type + p.b_type.row(0)};
  if (!out.op.allFinite() || !out.type.allFinite()) {
    throw NumericError("classify: non-finite logits");
  }
  return out;
}

RouterDecision classify(const RouterParams& p, const RowVector& z, double threshold) {
  auto logits = head_logits(p, z);
  const RowVector op = softmax(logits.op);
  const RowVector type = softmax(logits.type);
  RouterDecision d;
  for (std::size_t i = 0; i < kNumOps; ++i) d.op_probs[i] = op(ix(i));
  for (std::size_t i = 0; i < kNumContentTypes; ++i) d.type_probs[i] = type(ix(i));
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumContentTypes; ++i) {
    if (logits.type(ix(i)) > logits.type(ix(best))) best = i;
  }
  d.content_type = static_cast<ContentType>(best);
  d.add_score = d.op_probs[0];
  d.op = d.add_score >= threshold ? Op::Add : Op::Noop;
  return d;
}

RouterDecision route_embeddings(const RouterParams& p, const Contextualizer& f, const Matrix& e,
                                double threshold) {
  return classify(p, contextualize(f, project(p, e)), threshold);
}

Matrix to_double(const EmbeddingMatrix& m) { return m.cast<double>(); }

RouterDecision route_turn(const RouterParams& p, const Contextualizer& f,
                          const EmbeddingProvider& provider, std::span<const Turn* const> history,
                          const Turn& current, double threshold) {
  auto chunks = make_chunks(history, current);
  return route_embeddings(p, f, to_double(embed_chunks(provider, chunks)), threshold);
}

std::vector<std::uint8_t> encode_checkpoint(const RouterParams& params) {
  ByteWriter w;
  w.put_magic(kMagic);
  w.put_u32(static_cast<std::uint32_t>(params.dims.input));
  w.put_u32(static_cast<std::uint32_t>(params.dims.hidden));
  w.put_u32(static_cast<std::uint32_t>(params.dims.model));
  for (const auto* t : params.tensors()) {
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      for (Eigen::Index j = 0; j < t->cols(); ++j) w.put_f32(static_cast<float>((*t)(i, j)));
    }
  }
  w.seal();
  return w.bytes();
}

RouterParams decode_checkpoint(std::vector<std::uint8_t> bytes, std::string_view what) {
  ByteReader r(std::move(bytes), what);
  r.expect_magic(kMagic);
  RouterDims dims;
  dims.input = r.get_u32();
  dims.hidden = r.get_u32();
  dims.model = r.get_u32();
  auto p = RouterParams::zeros(dims);
  for (auto* t : p.tensors()) {
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      for (Eigen::Index j = 0; j < t->cols(); ++j) (*t)(i, j) = r.get_f32();
    }
  }
  if (!r.at_end()) throw ParseError(std::string(what), "trailing bytes before checksum");
  if (!p.all_finite()) throw NumericError(std::string(what) + ": non-finite parameter");
  return p;
}

void save_checkpoint(const RouterParams& params, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(params));
}

RouterParams load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file_bytes(path), path);
}

}  // namespace memrouter
