#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "yieldcast/common.hpp"

// Dense rank-2 tensor engine with a define-by-run reverse-mode tape. The tape
// is rebuilt per forward pass and is single-threaded; parameter tensors are
// immutable while tapes reference them, so independent tapes can run in
// parallel over shared parameters.

namespace yieldcast::tensor {

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols);
  static Tensor full(int rows, int cols, double value);
  static Tensor from(int rows, int cols, std::vector<double> values);
  static Tensor row(std::vector<double> values);
  static Tensor scalar(double value);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * cols_; }
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  const double* data() const { return data_->data(); }
  double at(int r, int c) const { return (*data_)[index(r, c)]; }
  double item() const;  // 1×1 only

  // In-place access; copies the buffer first if it is shared.
  double* mutable_data();
  void set(int r, int c, double value) { mutable_data()[index(r, c)] = value; }

  bool all_finite() const;
  bool bitwise_equal(const Tensor& other) const;

 private:
  Tensor(int rows, int cols, std::shared_ptr<std::vector<double>> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {}
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::shared_ptr<std::vector<double>> data_;
};

// Named parameter tensors in a fixed registration order; the order defines
// gradient-reduction and serialization order everywhere.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool has(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  const std::vector<std::string>& names() const { return order_; }
  std::size_t total_values() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Tensor> values_;
};

// Gradient of a scalar loss w.r.t. every parameter that entered the tape,
// keyed by parameter name, shapes mirroring the parameters.
using Gradients = std::map<std::string, Tensor>;

// Accumulates gradients across samples in a fixed order; used for the
// deterministic batch reduction.
class GradAccum {
 public:
  explicit GradAccum(const ParamStore& params);
  void add(const std::string& name, const double* grad, std::size_t n);
  void add_accum(const GradAccum& other);  // same param layout
  void scale_all(double factor);
  double* data(const std::string& name);
  const std::vector<std::string>& names() const { return order_; }
  std::vector<double>& buffer(const std::string& name);
  void reset();

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<double>> buffers_;
};

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(Tape&&) noexcept;
  Tape& operator=(Tape&&) noexcept;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  int constant(Tensor value);
  int param(const ParamStore& store, const std::string& name);

  // c = a·b with a (m×k), b (k×n)
  int matmul(int a, int b);
  // c = a·bᵀ with a (m×k), b (n×k)
  int matmul_nt(int a, int b);
  int add(int a, int b);           // same shape
  int add_rowvec(int a, int vec);  // (r×c) + (1×c) broadcast over rows
  int scale(int a, double factor);
  int relu(int a);
  int gelu(int a);                 // exact erf form
  int softmax(int a);              // per row, last dim
  // Softmax where columns with mask 0 get probability exactly 0; their
  // logits are never read, matching -inf attention logits without inf
  // arithmetic.
  int masked_softmax(int a, const std::vector<std::uint8_t>& column_mask);
  // gain/bias are (1×c); eps inside the sqrt.
  int layer_norm(int a, int gain, int bias, double eps = 1e-5);
  // Gathers rows of table (one per id); backward scatter-adds.
  int embedding(int table, const std::vector<int>& ids);
  // Keep mask from a counter-based stream keyed by `key`; kept activations
  // scale by 1/(1-rate). Identity (no node) when !train or rate == 0.
  int dropout(int a, double rate, bool train, std::uint64_t key);
  int slice_cols(int a, int c0, int c1);
  int concat_cols(int a, int b);
  int slice_row(int a, int r);
  // Scalar node: mean squared error over all elements.
  int mse_loss(int pred, int target);

  const Tensor& value(int id) const;

  // Reverse pass from a scalar loss. Fills per-node grads; call gradients()
  // or export_param_grads() afterwards.
  void backward(int loss);
  Gradients gradients() const;
  // Adds dloss/dparam into the accumulator (registration order).
  void export_param_grads(GradAccum& accum) const;

  std::size_t node_count() const;

 private:
  struct Node;
  int push(Node node, const char* op_name);
  std::vector<Node> nodes_;
};

struct ParamCoordinate {
  std::string name;
  std::size_t index = 0;
};

// Builds the loss for the current parameter values and returns its node id.
// Must be deterministic (dropout off).
using LossFn = std::function<int(Tape&, const ParamStore&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  ParamCoordinate worst;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central-difference check of the analytic gradient at the sampled parameter
// coordinates. Relative error is |a-n| / max(1e-8, |a|+|n|). Evaluates the
// loss twice up front and raises NondeterministicFunction if the values
// differ bitwise.
GradCheckReport grad_check(const ParamStore& params, const LossFn& loss_fn,
                           std::span<const ParamCoordinate> coords, double h);

}  // namespace yieldcast::tensor
