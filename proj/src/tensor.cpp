#include "ndps/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace ndps {

Parameter& ParamStore::create(const std::string& name, std::vector<int> dims) {
  if (params_.count(name))
    throw ArgumentError("parameter '" + name + "' already exists");
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("parameter '" + name + "' has dim <= 0");
    n *= static_cast<std::size_t>(d);
  }
  Parameter p;
  p.name = name;
  p.dims = std::move(dims);
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  auto [it, ok] = params_.emplace(name, std::move(p));
  (void)ok;
  return it->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t ParamStore::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.size();
  return n;
}

Tensor Tensor::zeros(std::vector<int> dims, bool requires_grad) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("tensor dim <= 0");
    n *= static_cast<std::size_t>(d);
  }
  auto node = std::make_shared<detail::Node>();
  node->dims = std::move(dims);
  node->val.assign(n, 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_values(std::vector<int> dims, std::vector<double> values,
                           bool requires_grad) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("tensor dim <= 0");
    n *= static_cast<std::size_t>(d);
  }
  if (n != values.size())
    throw ShapeError("value count does not match tensor dims");
  auto node = std::make_shared<detail::Node>();
  node->dims = std::move(dims);
  node->val = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::signal(const std::vector<double>& samples, bool requires_grad) {
  return from_values({1, static_cast<int>(samples.size())}, samples,
                     requires_grad);
}

const std::shared_ptr<detail::Node>& Tensor::node() const {
  if (!node_) throw StateError("use of undefined tensor");
  return node_;
}

int Tensor::channels() const {
  if (ndim() != 2) throw ShapeError("channels() on non-signal tensor");
  return dims()[0];
}

int Tensor::length() const {
  if (ndim() != 2) throw ShapeError("length() on non-signal tensor");
  return dims()[1];
}

double Tensor::value() const {
  if (size() != 1) throw ShapeError("value() on non-scalar tensor");
  return node()->val[0];
}

namespace {

// Iterative post-order DFS; graphs can be deep for long stacks.
void toposort(const std::shared_ptr<detail::Node>& root,
              std::vector<detail::Node*>& order) {
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (!visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const Tensor& loss) {
  auto& root = loss.node();
  if (root->size() != 1) throw ArgumentError("backward: loss must be scalar");
  if (root->spent) throw StateError("backward: graph already consumed");
  if (!root->requires_grad) return;  // nothing reachable requires gradients

  std::vector<detail::Node*> order;
  toposort(root, order);
  for (detail::Node* n : order) {
    if (n->spent) throw StateError("backward: graph already consumed");
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    n->spent = true;
    if (!n->requires_grad || !n->backprop) continue;
    n->ensure_grad();
    n->backprop(*n);
  }
  // Leaves bound to stored parameters hand their gradients back.
  for (detail::Node* n : order) {
    if (n->param && !n->grad.empty()) {
      auto& g = n->param->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n->grad[i];
    }
  }
}

std::vector<std::string> graph_op_kinds(const Tensor& root) {
  std::vector<detail::Node*> order;
  toposort(root.node(), order);
  std::vector<std::string> kinds;
  for (detail::Node* n : order) {
    std::string k = n->op;
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end())
      kinds.push_back(k);
  }
  std::sort(kinds.begin(), kinds.end());
  return kinds;
}

}  // namespace ndps
