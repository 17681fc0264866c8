#include "cosem/embedding.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "cosem/error.hpp"

namespace cosem {

void EmbeddingTable::initialize(Rng& rng) {
  fill_uniform(table_.value, 0.5 / static_cast<double>(dim()), rng);
  table_.zero_grad();
}

void EmbeddingTable::check_id(TokenId id) const {
  if (id >= rows()) {
    throw Error(ErrorCode::index_out_of_range, "embedding id " + std::to_string(id) +
                                                   " out of range for table with " +
                                                   std::to_string(rows()) + " rows");
  }
}

std::span<const double> EmbeddingTable::lookup(TokenId id) const {
  check_id(id);
  return table_.value.row(id);
}

Vector EmbeddingTable::mean_pool(std::span<const TokenId> ids) const {
  Vector out(dim(), 0.0);
  if (ids.empty()) return out;
  for (TokenId id : ids) check_id(id);

  std::vector<TokenId> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  for (TokenId id : sorted) {
    const auto row = table_.value.row(id);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += row[d];
  }
  const auto m = static_cast<double>(sorted.size());
  for (double& v : out) v /= m;
  return out;
}

void EmbeddingTable::mean_pool_backward(std::span<const TokenId> ids,
                                        std::span<const double> upstream) {
  if (ids.empty()) return;
  if (upstream.size() != dim()) {
    throw Error(ErrorCode::shape_mismatch, "mean_pool_backward: gradient has wrong length");
  }
  const double inv_m = 1.0 / static_cast<double>(ids.size());
  for (TokenId id : ids) {
    check_id(id);
    auto row = table_.grad.row(id);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] += upstream[d] * inv_m;
  }
}

}  // namespace cosem
