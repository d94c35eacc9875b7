#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "airseg/tensor.hpp"

namespace airseg {

// Ordered map from hierarchical parameter names to tensors. Iteration follows
// insertion order, which makes parameter traversal (and everything downstream:
// optimizers, checkpoints, initialization draws) deterministic.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> tensor;
    bool trainable;
  };

  Tensor<T>& add(const std::string& name, Tensor<T> tensor, bool trainable) {
    require(index_.find(name) == index_.end(), "duplicate parameter name: ", name);
    tensor.set_requires_grad(trainable);
    index_.emplace(name, entries_.size());
    entries_.push_back({name, std::move(tensor), trainable});
    return entries_.back().tensor;
  }

  bool contains(const std::string& name) const {
    return index_.find(name) != index_.end();
  }

  Tensor<T>& get(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter: ", name);
    return entries_[it->second].tensor;
  }

  const Tensor<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter: ", name);
    return entries_[it->second].tensor;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::vector<Tensor<T>> trainable_params() const {
    std::vector<Tensor<T>> out;
    for (const auto& e : entries_)
      if (e.trainable) out.push_back(e.tensor);
    return out;
  }

  std::size_t trainable_scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (e.trainable) n += e.tensor.numel();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_)
      if (e.trainable) e.tensor.zero_grad();
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace airseg
