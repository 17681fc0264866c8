#pragma once

#include <cstddef>
#include <span>

#include "cosem/corpus.hpp"
#include "cosem/numerics.hpp"

namespace cosem {

/// Q x D lookup table shared by every user.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim) : table_(rows, dim) {}

  std::size_t rows() const noexcept { return table_.value.rows(); }
  std::size_t dim() const noexcept { return table_.value.cols(); }

  Param& param() noexcept { return table_; }
  const Param& param() const noexcept { return table_; }

  /// Uniform in [-0.5/D, 0.5/D].
  void initialize(Rng& rng);

  std::span<const double> lookup(TokenId id) const;

  /// Mean of the referenced rows; the zero vector for no ids. Rows are summed
  /// in ascending id order so the result does not depend on `ids` order.
  Vector mean_pool(std::span<const TokenId> ids) const;

  /// Adds upstream / len(ids) to the gradient of every referenced row
  /// (twice for an id listed twice).
  void mean_pool_backward(std::span<const TokenId> ids, std::span<const double> upstream);

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  void check_id(TokenId id) const;

  Param table_;
};

}  // namespace cosem
