#pragma once

#include "mts/common.hpp"
#include "mts/mesh.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace mts {

// Local numbering of one subdomain's free (non-Dirichlet) nodes.
struct DofMap {
  std::vector<int> node_to_dof;  // -1 where the node is absent or Dirichlet
  std::vector<int> dof_to_node;  // ascending global node ids

  int size() const { return static_cast<int>(dof_to_node.size()); }
};

struct DofMaps {
  std::vector<DofMap> subdomains;  // index i holds subdomain id i + 1
  std::vector<char> is_dirichlet;  // per global node
  // Sorted 0-based subdomain indices whose elements touch each node.
  std::vector<std::vector<int>> node_subdomains;

  int subdomain_count() const { return static_cast<int>(subdomains.size()); }
};

DofMaps build_dof_maps(const Mesh& mesh, const PartitionMap& partition, const std::set<int>& dirichlet_nodes);
DofMaps build_dof_maps(const Mesh& mesh, const PartitionMap& partition,
                       const std::vector<std::string>& dirichlet_sets);

struct ConstraintEntry {
  int subdomain = 0;  // 0-based index
  int dof = 0;
  int sign = 1;
};

struct ConstraintRow {
  ConstraintEntry plus;   // lower subdomain id, sign +1
  ConstraintEntry minus;  // higher subdomain id, sign -1
  int node = -1;          // global node for mesh-derived rows
};

// Signed Boolean interface operator. Products are matrix-free.
class ConstraintMap {
 public:
  ConstraintMap() = default;
  ConstraintMap(std::vector<int> subdomain_sizes, std::vector<ConstraintRow> rows);

  int n_lambda() const { return static_cast<int>(rows_.size()); }
  int subdomain_count() const { return static_cast<int>(sizes_.size()); }
  int subdomain_size(int i) const { return sizes_.at(i); }
  const std::vector<ConstraintRow>& rows() const { return rows_; }

  struct ViewEntry {
    int row;
    int dof;
    double sign;
  };
  // Entries of C_i, ordered by row.
  const std::vector<ViewEntry>& view(int i) const { return views_.at(i); }

  // Σ_i C_i x_i
  Vector apply(const std::vector<Vector>& x) const;
  // y += C_i x_i
  void apply_add(int i, const Vector& x_i, Vector& y) const;
  // {C_iᵀ λ}
  std::vector<Vector> apply_transpose(const Vector& lambda) const;
  Vector apply_transpose(int i, const Vector& lambda) const;

  // One line per nonzero: row subdomain(1-based) dof sign node
  void dump(std::ostream& out) const;

 private:
  void check_lengths(const std::vector<Vector>& x) const;

  std::vector<int> sizes_;
  std::vector<ConstraintRow> rows_;
  std::vector<std::vector<ViewEntry>> views_;
};

// Chained rows (s1,+1; s2,-1), (s2,+1; s3,-1), ... per shared free node,
// ordered by node id then chain position.
ConstraintMap build_constraints(const DofMaps& dofs);

}  // namespace mts
