#include "yieldcast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "yieldcast/kernels.hpp"

namespace yieldcast::tensor {

namespace {

std::shared_ptr<std::vector<double>> make_buffer(int rows, int cols,
                                                 double fill) {
  if (rows <= 0 || cols <= 0) {
    fail(ErrorCode::ShapeMismatch,
         "dims must be positive, got " + std::to_string(rows) + "x" +
             std::to_string(cols));
  }
  return std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols) {
  return Tensor(rows, cols, make_buffer(rows, cols, 0.0));
}

Tensor Tensor::full(int rows, int cols, double value) {
  return Tensor(rows, cols, make_buffer(rows, cols, value));
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(rows) * cols || rows <= 0 ||
      cols <= 0) {
    fail(ErrorCode::ShapeMismatch,
         std::to_string(values.size()) + " values for a " +
             std::to_string(rows) + "x" + std::to_string(cols) + " tensor");
  }
  return Tensor(rows, cols,
                std::make_shared<std::vector<double>>(std::move(values)));
}

Tensor Tensor::row(std::vector<double> values) {
  return from(1, static_cast<int>(values.size()), std::move(values));
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    fail(ErrorCode::ShapeMismatch, "item() on a " + std::to_string(rows_) +
                                       "x" + std::to_string(cols_) + " tensor");
  }
  return (*data_)[0];
}

double* Tensor::mutable_data() {
  if (data_.use_count() > 1) {
    data_ = std::make_shared<std::vector<double>>(*data_);
  }
  return data_->data();
}

bool Tensor::all_finite() const {
  return kernels::all_finite(data(), size());
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  return same_shape(other) &&
         std::memcmp(data(), other.data(), size() * sizeof(double)) == 0;
}

void ParamStore::add(const std::string& name, Tensor value) {
  if (values_.count(name) > 0) {
    fail(ErrorCode::InvalidConfig, "duplicate parameter \"" + name + "\"");
  }
  order_.push_back(name);
  values_.emplace(name, std::move(value));
}

bool ParamStore::has(const std::string& name) const {
  return values_.count(name) > 0;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) {
    fail(ErrorCode::InvalidConfig, "unknown parameter \"" + name + "\"");
  }
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) {
    fail(ErrorCode::InvalidConfig, "unknown parameter \"" + name + "\"");
  }
  return it->second;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += at(name).size();
  return n;
}

GradAccum::GradAccum(const ParamStore& params) : order_(params.names()) {
  for (const auto& name : order_) {
    buffers_.emplace(name, std::vector<double>(params.at(name).size(), 0.0));
  }
}

void GradAccum::add(const std::string& name, const double* grad,
                    std::size_t n) {
  auto& buf = buffers_.at(name);
  if (buf.size() != n) {
    fail(ErrorCode::ShapeMismatch, "gradient size mismatch for " + name);
  }
  kernels::axpy(1.0, grad, buf.data(), n);
}

void GradAccum::add_accum(const GradAccum& other) {
  for (const auto& name : order_) {
    const auto& src = other.buffers_.at(name);
    add(name, src.data(), src.size());
  }
}

void GradAccum::scale_all(double factor) {
  for (auto& [name, buf] : buffers_) {
    kernels::scale(factor, buf.data(), buf.data(), buf.size());
  }
}

double* GradAccum::data(const std::string& name) {
  return buffers_.at(name).data();
}

std::vector<double>& GradAccum::buffer(const std::string& name) {
  return buffers_.at(name);
}

void GradAccum::reset() {
  for (auto& [name, buf] : buffers_) {
    std::fill(buf.begin(), buf.end(), 0.0);
  }
}

// ---------------------------------------------------------------------------
// Tape

enum class Op {
  Constant,
  Param,
  MatmulNN,
  MatmulNT,
  Add,
  AddRowVec,
  Scale,
  Relu,
  Gelu,
  Softmax,
  MaskedSoftmax,
  LayerNorm,
  Embedding,
  Dropout,
  SliceCols,
  ConcatCols,
  SliceRow,
  MseLoss,
};

struct Tape::Node {
  Op op = Op::Constant;
  int a = -1;
  int b = -1;
  int c = -1;  // third input (layer_norm bias)
  Tensor value;
  std::vector<double> grad;
  std::vector<double> aux;        // op-specific saved state
  std::vector<int> ids;           // embedding ids
  std::vector<std::uint8_t> mask; // masked softmax
  int i0 = 0;
  int i1 = 0;
  double x0 = 0.0;
  std::string param_name;
};

Tape::Tape() = default;
Tape::~Tape() = default;

std::size_t Tape::node_count() const { return nodes_.size(); }
Tape::Tape(Tape&&) noexcept = default;
Tape& Tape::operator=(Tape&&) noexcept = default;

int Tape::push(Node node, const char* op_name) {
  if (!node.value.all_finite()) {
    fail(ErrorCode::NonFinite,
         std::string("non-finite values out of ") + op_name);
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Tape::value(int id) const {
  return nodes_.at(static_cast<std::size_t>(id)).value;
}

int Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n), "constant");
}

int Tape::param(const ParamStore& store, const std::string& name) {
  Node n;
  n.op = Op::Param;
  n.value = store.at(name);
  n.param_name = name;
  return push(std::move(n), "param");
}

namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ShapeMismatch, what);
}

}  // namespace

int Tape::matmul(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_shape(A.cols() == B.rows(),
                "matmul " + std::to_string(A.rows()) + "x" +
                    std::to_string(A.cols()) + " by " +
                    std::to_string(B.rows()) + "x" + std::to_string(B.cols()));
  Tensor out = Tensor::zeros(A.rows(), B.cols());
  kernels::matmul_nn_acc(A.data(), B.data(), out.mutable_data(), A.rows(),
                         A.cols(), B.cols());
  Node n;
  n.op = Op::MatmulNN;
  n.a = a;
  n.b = b;
  n.value = std::move(out);
  return push(std::move(n), "matmul");
}

int Tape::matmul_nt(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_shape(A.cols() == B.cols(),
                "matmul_nt inner dims " + std::to_string(A.cols()) + " vs " +
                    std::to_string(B.cols()));
  Tensor out = Tensor::zeros(A.rows(), B.rows());
  kernels::matmul_nt_acc(A.data(), B.data(), out.mutable_data(), A.rows(),
                         A.cols(), B.rows());
  Node n;
  n.op = Op::MatmulNT;
  n.a = a;
  n.b = b;
  n.value = std::move(out);
  return push(std::move(n), "matmul_nt");
}

int Tape::add(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_shape(A.same_shape(B), "add of unequal shapes");
  Tensor out = Tensor::zeros(A.rows(), A.cols());
  kernels::add(A.data(), B.data(), out.mutable_data(), A.size());
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.value = std::move(out);
  return push(std::move(n), "add");
}

int Tape::add_rowvec(int a, int vec) {
  const Tensor& A = value(a);
  const Tensor& V = value(vec);
  require_shape(V.rows() == 1 && V.cols() == A.cols(),
                "row-vector broadcast needs 1x" + std::to_string(A.cols()));
  Tensor out = Tensor::zeros(A.rows(), A.cols());
  double* o = out.mutable_data();
  for (int r = 0; r < A.rows(); ++r) {
    kernels::add(A.data() + static_cast<std::size_t>(r) * A.cols(), V.data(),
                 o + static_cast<std::size_t>(r) * A.cols(), A.cols());
  }
  Node n;
  n.op = Op::AddRowVec;
  n.a = a;
  n.b = vec;
  n.value = std::move(out);
  return push(std::move(n), "add_rowvec");
}

int Tape::scale(int a, double factor) {
  const Tensor& A = value(a);
  Tensor out = Tensor::zeros(A.rows(), A.cols());
  kernels::scale(factor, A.data(), out.mutable_data(), A.size());
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.x0 = factor;
  n.value = std::move(out);
  return push(std::move(n), "scale");
}

int Tape::relu(int a) {
  const Tensor& A = value(a);
  Tensor out = Tensor::zeros(A.rows(), A.cols());
  double* o = out.mutable_data();
  const double* x = A.data();
  for (std::size_t i = 0; i < A.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.value = std::move(out);
  return push(std::move(n), "relu");
}

namespace {

inline double normal_cdf(double x) {
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

int Tape::gelu(int a) {
  const Tensor& A = value(a);
  Tensor out = Tensor::zeros(A.rows(), A.cols());
  double* o = out.mutable_data();
  const double* x = A.data();
  for (std::size_t i = 0; i < A.size(); ++i) o[i] = x[i] * normal_cdf(x[i]);
  Node n;
  n.op = Op::Gelu;
  n.a = a;
  n.value = std::move(out);
  return push(std::move(n), "gelu");
}

int Tape::softmax(int a) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(value(a).cols()), 1);
  int id = masked_softmax(a, mask);
  nodes_.back().op = Op::Softmax;
  return id;
}

int Tape::masked_softmax(int a, const std::vector<std::uint8_t>& column_mask) {
  const Tensor& A = value(a);
  require_shape(column_mask.size() == static_cast<std::size_t>(A.cols()),
                "mask length " + std::to_string(column_mask.size()) +
                    " vs cols " + std::to_string(A.cols()));
  bool any = false;
  for (auto m : column_mask) any |= m != 0;
  require_shape(any, "mask excludes every column");

  Tensor out = Tensor::zeros(A.rows(), A.cols());
  double* o = out.mutable_data();
  const int cols = A.cols();
  for (int r = 0; r < A.rows(); ++r) {
    const double* x = A.data() + static_cast<std::size_t>(r) * cols;
    double* y = o + static_cast<std::size_t>(r) * cols;
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) {
      if (column_mask[static_cast<std::size_t>(c)] && x[c] > max_logit) {
        max_logit = x[c];
      }
    }
    double denom = 0.0;
    for (int c = 0; c < cols; ++c) {
      if (column_mask[static_cast<std::size_t>(c)]) {
        y[c] = std::exp(x[c] - max_logit);
        denom += y[c];
      }
    }
    for (int c = 0; c < cols; ++c) {
      y[c] = column_mask[static_cast<std::size_t>(c)] ? y[c] / denom : 0.0;
    }
  }
  Node n;
  n.op = Op::MaskedSoftmax;
  n.a = a;
  n.mask = column_mask;
  n.value = std::move(out);
  return push(std::move(n), "masked_softmax");
}

int Tape::layer_norm(int a, int gain, int bias, double eps) {
  const Tensor& A = value(a);
  const Tensor& G = value(gain);
  const Tensor& B = value(bias);
  require_shape(G.rows() == 1 && G.cols() == A.cols() && B.rows() == 1 &&
                    B.cols() == A.cols(),
                "layer_norm gain/bias must be 1x" + std::to_string(A.cols()));
  const int cols = A.cols();
  Tensor out = Tensor::zeros(A.rows(), cols);
  double* o = out.mutable_data();
  Node n;
  // aux: per-row inv_std, then the normalized activations x̂ row-major
  n.aux.resize(static_cast<std::size_t>(A.rows()) +
               static_cast<std::size_t>(A.rows()) * cols);
  double* inv_std = n.aux.data();
  double* xhat = n.aux.data() + A.rows();
  for (int r = 0; r < A.rows(); ++r) {
    const double* x = A.data() + static_cast<std::size_t>(r) * cols;
    double mean = kernels::sum(x, static_cast<std::size_t>(cols)) / cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) var += (x[c] - mean) * (x[c] - mean);
    var /= cols;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    double* xh = xhat + static_cast<std::size_t>(r) * cols;
    double* y = o + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      xh[c] = (x[c] - mean) * inv_std[r];
      y[c] = xh[c] * G.data()[c] + B.data()[c];
    }
  }
  n.op = Op::LayerNorm;
  n.a = a;
  n.b = gain;
  n.c = bias;
  n.value = std::move(out);
  return push(std::move(n), "layer_norm");
}

int Tape::embedding(int table, const std::vector<int>& ids) {
  const Tensor& T = value(table);
  Tensor out = Tensor::zeros(static_cast<int>(ids.size()), T.cols());
  double* o = out.mutable_data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    require_shape(id >= 0 && id < T.rows(),
                  "embedding id " + std::to_string(id) + " out of range 0.." +
                      std::to_string(T.rows() - 1));
    std::memcpy(o + i * static_cast<std::size_t>(T.cols()),
                T.data() + static_cast<std::size_t>(id) * T.cols(),
                static_cast<std::size_t>(T.cols()) * sizeof(double));
  }
  Node n;
  n.op = Op::Embedding;
  n.a = table;
  n.ids = ids;
  n.value = std::move(out);
  return push(std::move(n), "embedding");
}

int Tape::dropout(int a, double rate, bool train, std::uint64_t key) {
  if (rate < 0.0 || rate >= 1.0) {
    fail(ErrorCode::InvalidConfig,
         "dropout rate must lie in [0,1), got " + std::to_string(rate));
  }
  if (!train || rate == 0.0) return a;
  const Tensor& A = value(a);
  Tensor out = Tensor::zeros(A.rows(), A.cols());
  double* o = out.mutable_data();
  const double* x = A.data();
  const double keep_scale = 1.0 / (1.0 - rate);
  Node n;
  n.aux.resize(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) {
    double u = static_cast<double>(splitmix64(key ^ splitmix64(i)) >> 11) *
               0x1.0p-53;
    n.aux[i] = u < rate ? 0.0 : keep_scale;
    o[i] = x[i] * n.aux[i];
  }
  n.op = Op::Dropout;
  n.a = a;
  n.x0 = rate;
  n.value = std::move(out);
  return push(std::move(n), "dropout");
}

int Tape::slice_cols(int a, int c0, int c1) {
  const Tensor& A = value(a);
  require_shape(0 <= c0 && c0 < c1 && c1 <= A.cols(),
                "slice_cols [" + std::to_string(c0) + "," +
                    std::to_string(c1) + ") of " + std::to_string(A.cols()));
  Tensor out = Tensor::zeros(A.rows(), c1 - c0);
  double* o = out.mutable_data();
  for (int r = 0; r < A.rows(); ++r) {
    std::memcpy(o + static_cast<std::size_t>(r) * (c1 - c0),
                A.data() + static_cast<std::size_t>(r) * A.cols() + c0,
                static_cast<std::size_t>(c1 - c0) * sizeof(double));
  }
  Node n;
  n.op = Op::SliceCols;
  n.a = a;
  n.i0 = c0;
  n.i1 = c1;
  n.value = std::move(out);
  return push(std::move(n), "slice_cols");
}

int Tape::concat_cols(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_shape(A.rows() == B.rows(), "concat_cols row mismatch");
  Tensor out = Tensor::zeros(A.rows(), A.cols() + B.cols());
  double* o = out.mutable_data();
  for (int r = 0; r < A.rows(); ++r) {
    std::memcpy(o + static_cast<std::size_t>(r) * (A.cols() + B.cols()),
                A.data() + static_cast<std::size_t>(r) * A.cols(),
                static_cast<std::size_t>(A.cols()) * sizeof(double));
    std::memcpy(o + static_cast<std::size_t>(r) * (A.cols() + B.cols()) +
                    A.cols(),
                B.data() + static_cast<std::size_t>(r) * B.cols(),
                static_cast<std::size_t>(B.cols()) * sizeof(double));
  }
  Node n;
  n.op = Op::ConcatCols;
  n.a = a;
  n.b = b;
  n.i0 = A.cols();
  n.value = std::move(out);
  return push(std::move(n), "concat_cols");
}

int Tape::slice_row(int a, int r) {
  const Tensor& A = value(a);
  require_shape(0 <= r && r < A.rows(),
                "slice_row " + std::to_string(r) + " of " +
                    std::to_string(A.rows()));
  Tensor out = Tensor::zeros(1, A.cols());
  std::memcpy(out.mutable_data(),
              A.data() + static_cast<std::size_t>(r) * A.cols(),
              static_cast<std::size_t>(A.cols()) * sizeof(double));
  Node n;
  n.op = Op::SliceRow;
  n.a = a;
  n.i0 = r;
  n.value = std::move(out);
  return push(std::move(n), "slice_row");
}

int Tape::mse_loss(int pred, int target) {
  const Tensor& P = value(pred);
  const Tensor& T = value(target);
  require_shape(P.same_shape(T), "mse_loss shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    double d = P.data()[i] - T.data()[i];
    acc += d * d;
  }
  Node n;
  n.op = Op::MseLoss;
  n.a = pred;
  n.b = target;
  n.value = Tensor::scalar(acc / static_cast<double>(P.size()));
  return push(std::move(n), "mse_loss");
}

void Tape::backward(int loss) {
  Node& top = nodes_.at(static_cast<std::size_t>(loss));
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    fail(ErrorCode::NotScalarLoss,
         "backward needs a 1x1 loss, got " + std::to_string(top.value.rows()) +
             "x" + std::to_string(top.value.cols()));
  }
  for (auto& node : nodes_) {
    node.grad.assign(node.value.size(), 0.0);
  }
  top.grad[0] = 1.0;

  for (int id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) continue;
    const double* dy = n.grad.data();
    switch (n.op) {
      case Op::Constant:
      case Op::Param:
        break;
      case Op::MatmulNN: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        Node& B = nodes_[static_cast<std::size_t>(n.b)];
        // dA += dC·Bᵀ ; dB += Aᵀ·dC
        kernels::matmul_nt_acc(dy, B.value.data(), A.grad.data(),
                               A.value.rows(), B.value.cols(), B.value.rows());
        kernels::matmul_tn_acc(A.value.data(), dy, B.grad.data(),
                               B.value.rows(), A.value.rows(), B.value.cols());
        break;
      }
      case Op::MatmulNT: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        Node& B = nodes_[static_cast<std::size_t>(n.b)];
        // C = A·Bᵀ: dA += dC·B ; dB += dCᵀ·A
        kernels::matmul_nn_acc(dy, B.value.data(), A.grad.data(),
                               A.value.rows(), B.value.rows(), B.value.cols());
        kernels::matmul_tn_acc(dy, A.value.data(), B.grad.data(),
                               B.value.rows(), A.value.rows(), A.value.cols());
        break;
      }
      case Op::Add: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        Node& B = nodes_[static_cast<std::size_t>(n.b)];
        kernels::axpy(1.0, dy, A.grad.data(), A.grad.size());
        kernels::axpy(1.0, dy, B.grad.data(), B.grad.size());
        break;
      }
      case Op::AddRowVec: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        Node& V = nodes_[static_cast<std::size_t>(n.b)];
        kernels::axpy(1.0, dy, A.grad.data(), A.grad.size());
        const int cols = A.value.cols();
        for (int r = 0; r < A.value.rows(); ++r) {
          kernels::axpy(1.0, dy + static_cast<std::size_t>(r) * cols,
                        V.grad.data(), static_cast<std::size_t>(cols));
        }
        break;
      }
      case Op::Scale: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        kernels::axpy(n.x0, dy, A.grad.data(), A.grad.size());
        break;
      }
      case Op::Relu: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        const double* x = A.value.data();
        for (std::size_t i = 0; i < A.grad.size(); ++i) {
          if (x[i] > 0.0) A.grad[i] += dy[i];
        }
        break;
      }
      case Op::Gelu: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        const double* x = A.value.data();
        for (std::size_t i = 0; i < A.grad.size(); ++i) {
          A.grad[i] += dy[i] * (normal_cdf(x[i]) + x[i] * normal_pdf(x[i]));
        }
        break;
      }
      case Op::Softmax:
      case Op::MaskedSoftmax: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        const int cols = n.value.cols();
        const double* y = n.value.data();
        for (int r = 0; r < n.value.rows(); ++r) {
          const double* yr = y + static_cast<std::size_t>(r) * cols;
          const double* dr = dy + static_cast<std::size_t>(r) * cols;
          double inner = 0.0;
          for (int c = 0; c < cols; ++c) inner += dr[c] * yr[c];
          double* da = A.grad.data() + static_cast<std::size_t>(r) * cols;
          for (int c = 0; c < cols; ++c) {
            if (n.mask[static_cast<std::size_t>(c)]) {
              da[c] += yr[c] * (dr[c] - inner);
            }
          }
        }
        break;
      }
      case Op::LayerNorm: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        Node& G = nodes_[static_cast<std::size_t>(n.b)];
        Node& B = nodes_[static_cast<std::size_t>(n.c)];
        const int cols = n.value.cols();
        const double* inv_std = n.aux.data();
        const double* xhat = n.aux.data() + n.value.rows();
        const double* g = G.value.data();
        for (int r = 0; r < n.value.rows(); ++r) {
          const double* dr = dy + static_cast<std::size_t>(r) * cols;
          const double* xh = xhat + static_cast<std::size_t>(r) * cols;
          double* da = A.grad.data() + static_cast<std::size_t>(r) * cols;
          double mean_dg = 0.0;
          double mean_dgx = 0.0;
          for (int c = 0; c < cols; ++c) {
            double dgc = dr[c] * g[c];
            mean_dg += dgc;
            mean_dgx += dgc * xh[c];
            G.grad[static_cast<std::size_t>(c)] += dr[c] * xh[c];
            B.grad[static_cast<std::size_t>(c)] += dr[c];
          }
          mean_dg /= cols;
          mean_dgx /= cols;
          for (int c = 0; c < cols; ++c) {
            double dgc = dr[c] * g[c];
            da[c] += inv_std[r] * (dgc - mean_dg - xh[c] * mean_dgx);
          }
        }
        break;
      }
      case Op::Embedding: {
        Node& T = nodes_[static_cast<std::size_t>(n.a)];
        const int cols = n.value.cols();
        for (std::size_t i = 0; i < n.ids.size(); ++i) {
          kernels::axpy(1.0, dy + i * static_cast<std::size_t>(cols),
                        T.grad.data() +
                            static_cast<std::size_t>(n.ids[i]) * cols,
                        static_cast<std::size_t>(cols));
        }
        break;
      }
      case Op::Dropout: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < A.grad.size(); ++i) {
          A.grad[i] += dy[i] * n.aux[i];
        }
        break;
      }
      case Op::SliceCols: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        const int w = n.i1 - n.i0;
        const int acols = A.value.cols();
        for (int r = 0; r < n.value.rows(); ++r) {
          kernels::axpy(1.0, dy + static_cast<std::size_t>(r) * w,
                        A.grad.data() +
                            static_cast<std::size_t>(r) * acols + n.i0,
                        static_cast<std::size_t>(w));
        }
        break;
      }
      case Op::ConcatCols: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        Node& B = nodes_[static_cast<std::size_t>(n.b)];
        const int ac = n.i0;
        const int bc = n.value.cols() - ac;
        for (int r = 0; r < n.value.rows(); ++r) {
          const double* dr = dy + static_cast<std::size_t>(r) * (ac + bc);
          kernels::axpy(1.0, dr,
                        A.grad.data() + static_cast<std::size_t>(r) * ac,
                        static_cast<std::size_t>(ac));
          kernels::axpy(1.0, dr + ac,
                        B.grad.data() + static_cast<std::size_t>(r) * bc,
                        static_cast<std::size_t>(bc));
        }
        break;
      }
      case Op::SliceRow: {
        Node& A = nodes_[static_cast<std::size_t>(n.a)];
        const int cols = n.value.cols();
        kernels::axpy(1.0, dy,
                      A.grad.data() + static_cast<std::size_t>(n.i0) * cols,
                      static_cast<std::size_t>(cols));
        break;
      }
      case Op::MseLoss: {
        Node& P = nodes_[static_cast<std::size_t>(n.a)];
        Node& T = nodes_[static_cast<std::size_t>(n.b)];
        const double scale_factor =
            2.0 * dy[0] / static_cast<double>(P.value.size());
        for (std::size_t i = 0; i < P.grad.size(); ++i) {
          double d = P.value.data()[i] - T.value.data()[i];
          P.grad[i] += scale_factor * d;
          T.grad[i] -= scale_factor * d;
        }
        break;
      }
    }
  }
}

Gradients Tape::gradients() const {
  Gradients out;
  for (const auto& n : nodes_) {
    if (n.op != Op::Param || n.grad.empty()) continue;
    Tensor g = Tensor::from(n.value.rows(), n.value.cols(), n.grad);
    auto [it, inserted] = out.emplace(n.param_name, std::move(g));
    if (!inserted) {
      // Parameter referenced from several tape leaves; sum contributions.
      double* acc = it->second.mutable_data();
      kernels::axpy(1.0, n.grad.data(), acc, n.grad.size());
    }
  }
  return out;
}

void Tape::export_param_grads(GradAccum& accum) const {
  for (const auto& n : nodes_) {
    if (n.op != Op::Param || n.grad.empty()) continue;
    accum.add(n.param_name, n.grad.data(), n.grad.size());
  }
}

GradCheckReport grad_check(const ParamStore& params, const LossFn& loss_fn,
                           std::span<const ParamCoordinate> coords, double h) {
  if (h <= 0.0) {
    fail(ErrorCode::InvalidConfig, "grad_check step must be positive");
  }
  auto eval = [&](const ParamStore& p) {
    Tape tape;
    int loss = loss_fn(tape, p);
    return tape.value(loss).item();
  };

  const double base1 = eval(params);
  const double base2 = eval(params);
  if (std::memcmp(&base1, &base2, sizeof(double)) != 0) {
    fail(ErrorCode::NondeterministicFunction,
         "two identical evaluations differ: " + std::to_string(base1) +
             " vs " + std::to_string(base2));
  }

  Tape tape;
  int loss = loss_fn(tape, params);
  tape.backward(loss);
  Gradients grads = tape.gradients();

  GradCheckReport report;
  for (const auto& coord : coords) {
    auto it = grads.find(coord.name);
    double analytic = 0.0;
    if (it != grads.end()) {
      analytic = it->second.data()[coord.index];
    }

    ParamStore perturbed_up;
    ParamStore perturbed_down;
    for (const auto& name : params.names()) {
      perturbed_up.add(name, params.at(name));
      perturbed_down.add(name, params.at(name));
    }
    perturbed_up.at(coord.name).mutable_data()[coord.index] += h;
    perturbed_down.at(coord.name).mutable_data()[coord.index] -= h;
    const double numeric =
        (eval(perturbed_up) - eval(perturbed_down)) / (2.0 * h);

    const double rel = std::abs(analytic - numeric) /
                       std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    if (rel >= report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst = coord;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace yieldcast::tensor
