#ifndef NDPS_TENSOR_HPP
#define NDPS_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ndps/error.hpp"

namespace ndps {

// A named trainable tensor with its gradient accumulator. Values and grads
// always have matching sizes.
struct Parameter {
  std::string name;
  std::vector<int> dims;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
};

// Ordered map of parameters. std::map keeps iteration order deterministic,
// which checkpointing and Adam rely on.
class ParamStore {
 public:
  Parameter& create(const std::string& name, std::vector<int> dims);
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  void zero_grad();
  std::size_t param_count() const;  // total scalar count

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

namespace detail {

struct Node {
  std::vector<int> dims;
  std::vector<double> val;
  std::vector<double> grad;  // sized lazily during backward
  bool requires_grad = false;
  bool spent = false;
  const char* op = "leaf";
  Parameter* param = nullptr;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  std::size_t size() const { return val.size(); }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

}  // namespace detail

// Handle to a node of the per-call computation graph. Graphs are rebuilt on
// every forward pass; a node records its parents and a backprop closure only
// when some ancestor requires gradients, so pure inference retains nothing.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  // Leaf constructors.
  static Tensor zeros(std::vector<int> dims, bool requires_grad = false);
  static Tensor from_values(std::vector<int> dims, std::vector<double> values,
                            bool requires_grad = false);
  // 1-channel signal from samples.
  static Tensor signal(const std::vector<double>& samples,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& dims() const { return node()->dims; }
  int ndim() const { return static_cast<int>(node()->dims.size()); }
  std::size_t size() const { return node()->val.size(); }

  // Signal accessors; valid for 2-D (channels x time) tensors.
  int channels() const;
  int length() const;

  const std::vector<double>& values() const { return node()->val; }
  double value() const;  // scalar tensors only
  bool requires_grad() const { return node()->requires_grad; }
  const char* op_name() const { return node()->op; }

  // Gradient w.r.t. this tensor, available after backward() has visited it.
  const std::vector<double>& grad() const { return node()->grad; }

  const std::shared_ptr<detail::Node>& node() const;

 private:
  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode sweep from a scalar loss. Fills Parameter::grad for every
// parameter reachable from the loss; parameters not in the graph keep their
// current (zeroed) slots. The visited graph is marked spent; running backward
// through it again raises StateError.
void backward(const Tensor& loss);

// Lists every op kind appearing in the graph below `root` (deduplicated).
std::vector<std::string> graph_op_kinds(const Tensor& root);

}  // namespace ndps

#endif  // NDPS_TENSOR_HPP
