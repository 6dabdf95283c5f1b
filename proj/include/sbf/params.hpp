#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sbf/tape.hpp"
#include "sbf/tensor.hpp"

namespace sbf {

// Ordered named-parameter container. Iteration order is insertion order and
// is part of the determinism contract (optimizer state, gradient reduction
// and checkpoint layout all follow it).
template <typename T>
class ParamStoreT {
 public:
  int add(const std::string& name, TensorT<T> value) {
    if (index_.count(name)) throw std::invalid_argument("params: duplicate " + name);
    index_[name] = static_cast<int>(names_.size());
    names_.push_back(name);
    values_.push_back(std::move(value));
    return static_cast<int>(names_.size()) - 1;
  }

  int index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("params: unknown " + name);
    return it->second;
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_[static_cast<size_t>(i)]; }
  TensorT<T>& value(int i) { return values_[static_cast<size_t>(i)]; }
  const TensorT<T>& value(int i) const { return values_[static_cast<size_t>(i)]; }
  TensorT<T>& at(const std::string& name) { return values_[static_cast<size_t>(index(name))]; }
  const TensorT<T>& at(const std::string& name) const {
    return values_[static_cast<size_t>(index(name))];
  }

  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& v : values_) n += v.numel();
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<TensorT<T>> values_;
  std::unordered_map<std::string, int> index_;
};

// Per-parameter gradients, parallel to a ParamStoreT.
template <typename T>
using GradsT = std::vector<TensorT<T>>;

// Leaf handles for one forward pass: every parameter becomes a tape leaf.
template <typename T>
class LeavesT {
 public:
  LeavesT(TapeT<T>& tape, const ParamStoreT<T>& store, bool requires_grad)
      : store_(&store) {
    ids_.reserve(static_cast<size_t>(store.size()));
    for (int i = 0; i < store.size(); ++i)
      ids_.push_back(tape.add_leaf(store.value(i), requires_grad));
    tape_ = &tape;
  }

  VarT<T> at(const std::string& name) const {
    return {tape_, ids_[static_cast<size_t>(store_->index(name))]};
  }

  // Gradients in store order; zero tensors where a parameter was unused.
  GradsT<T> collect_grads() const {
    GradsT<T> out;
    out.reserve(ids_.size());
    for (size_t i = 0; i < ids_.size(); ++i) {
      const int id = ids_[i];
      if (tape_->has_grad(id))
        out.push_back(tape_->grad(id));
      else
        out.push_back(TensorT<T>::zeros(store_->value(static_cast<int>(i)).shape));
    }
    return out;
  }

 private:
  TapeT<T>* tape_ = nullptr;
  const ParamStoreT<T>* store_ = nullptr;
  std::vector<int> ids_;
};

template <typename T>
void accumulate_grads(GradsT<T>& into, const GradsT<T>& from) {
  if (into.empty()) {
    into = from;
    return;
  }
  if (into.size() != from.size())
    throw std::invalid_argument("grads: cardinality mismatch");
  for (size_t i = 0; i < into.size(); ++i)
    for (int64_t j = 0; j < into[i].numel(); ++j) into[i][j] += from[i][j];
}

template <typename T>
void scale_grads(GradsT<T>& g, T s) {
  for (auto& t : g)
    for (auto& v : t.data) v *= s;
}

template <typename T>
double grad_norm(const GradsT<T>& g) {
  double s = 0.0;
  for (const auto& t : g)
    for (const T& v : t.data) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

}  // namespace sbf
