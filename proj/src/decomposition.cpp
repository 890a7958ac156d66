#include "mts/decomposition.hpp"

#include <algorithm>
#include <ostream>

namespace mts {

DofMaps build_dof_maps(const Mesh& mesh, const PartitionMap& partition, const std::set<int>& dirichlet_nodes) {
  validate_partition(partition, mesh);
  const int n_nodes = static_cast<int>(mesh.nodes.size());
  const int n_sub = partition.subdomain_count;
  DofMaps maps;
  maps.is_dirichlet.assign(n_nodes, 0);
  for (int n : dirichlet_nodes) {
    if (n < 0 || n >= n_nodes) throw Error("Dirichlet node " + std::to_string(n) + " out of range");
    maps.is_dirichlet[n] = 1;
  }
  std::vector<std::vector<char>> touches(n_sub, std::vector<char>(n_nodes, 0));
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    int s = partition.element_to_subdomain[e] - 1;
    for (int n : mesh.elements[e].nodes) touches[s][n] = 1;
  }
  maps.node_subdomains.assign(n_nodes, {});
  maps.subdomains.resize(n_sub);
  for (int s = 0; s < n_sub; ++s) {
    DofMap& map = maps.subdomains[s];
    map.node_to_dof.assign(n_nodes, -1);
    for (int n = 0; n < n_nodes; ++n) {
      if (!touches[s][n]) continue;
      maps.node_subdomains[n].push_back(s);
      if (maps.is_dirichlet[n]) continue;
      map.node_to_dof[n] = static_cast<int>(map.dof_to_node.size());
      map.dof_to_node.push_back(n);
    }
  }
  return maps;
}

DofMaps build_dof_maps(const Mesh& mesh, const PartitionMap& partition,
                       const std::vector<std::string>& dirichlet_sets) {
  std::set<int> nodes;
  for (const auto& name : dirichlet_sets) {
    const auto& set = mesh.boundary_set(name);
    nodes.insert(set.begin(), set.end());
  }
  return build_dof_maps(mesh, partition, nodes);
}

ConstraintMap::ConstraintMap(std::vector<int> subdomain_sizes, std::vector<ConstraintRow> rows)
    : sizes_(std::move(subdomain_sizes)), rows_(std::move(rows)) {
  views_.assign(sizes_.size(), {});
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const auto& row = rows_[k];
    for (const ConstraintEntry* e : {&row.plus, &row.minus}) {
      if (e->subdomain < 0 || e->subdomain >= static_cast<int>(sizes_.size())) {
        throw Error("constraint row " + std::to_string(k) + " references an unknown subdomain");
      }
      if (e->dof < 0 || e->dof >= sizes_[e->subdomain]) {
        throw Error("constraint row " + std::to_string(k) + " references dof " + std::to_string(e->dof) +
                    " outside subdomain " + std::to_string(e->subdomain + 1));
      }
      if (e->sign != 1 && e->sign != -1) throw Error("constraint signs must be +1 or -1");
      views_[e->subdomain].push_back({static_cast<int>(k), e->dof, static_cast<double>(e->sign)});
    }
    if (row.plus.subdomain == row.minus.subdomain) {
      throw Error("constraint row " + std::to_string(k) + " couples a subdomain with itself");
    }
    if (row.plus.sign == row.minus.sign) throw Error("constraint row " + std::to_string(k) + " needs opposite signs");
  }
}

void ConstraintMap::check_lengths(const std::vector<Vector>& x) const {
  if (x.size() != sizes_.size()) throw Error("expected one vector per subdomain");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != sizes_[i]) {
      throw Error("subdomain " + std::to_string(i + 1) + " vector has length " + std::to_string(x[i].size()) +
                  ", expected " + std::to_string(sizes_[i]));
    }
  }
}

Vector ConstraintMap::apply(const std::vector<Vector>& x) const {
  check_lengths(x);
  Vector y = Vector::Zero(n_lambda());
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const auto& r = rows_[k];
    y[k] = r.plus.sign * x[r.plus.subdomain][r.plus.dof] + r.minus.sign * x[r.minus.subdomain][r.minus.dof];
  }
  return y;
}

void ConstraintMap::apply_add(int i, const Vector& x_i, Vector& y) const {
  if (x_i.size() != sizes_.at(i)) throw Error("subdomain vector length mismatch");
  if (y.size() != n_lambda()) throw Error("multiplier vector length mismatch");
  for (const auto& e : views_[i]) y[e.row] += e.sign * x_i[e.dof];
}

Vector ConstraintMap::apply_transpose(int i, const Vector& lambda) const {
  if (lambda.size() != n_lambda()) {
    throw Error("multiplier vector has length " + std::to_string(lambda.size()) + ", expected " +
                std::to_string(n_lambda()));
  }
  Vector out = Vector::Zero(sizes_.at(i));
  for (const auto& e : views_[i]) out[e.dof] += e.sign * lambda[e.row];
  return out;
}

std::vector<Vector> ConstraintMap::apply_transpose(const Vector& lambda) const {
  std::vector<Vector> out;
  out.reserve(sizes_.size());
  for (int i = 0; i < subdomain_count(); ++i) out.push_back(apply_transpose(i, lambda));
  return out;
}

void ConstraintMap::dump(std::ostream& out) const {
  out << "# row subdomain dof sign node\n";
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const auto& r = rows_[k];
    for (const ConstraintEntry* e : {&r.plus, &r.minus}) {
      out << k << ' ' << e->subdomain + 1 << ' ' << e->dof << ' ' << e->sign << ' ' << r.node << '\n';
    }
  }
}

ConstraintMap build_constraints(const DofMaps& dofs) {
  std::vector<int> sizes;
  for (const auto& map : dofs.subdomains) sizes.push_back(map.size());
  std::vector<ConstraintRow> rows;
  const int n_nodes = static_cast<int>(dofs.node_subdomains.size());
  for (int n = 0; n < n_nodes; ++n) {
    const auto& subs = dofs.node_subdomains[n];
    if (subs.size() < 2 || dofs.is_dirichlet[n]) continue;
    for (std::size_t k = 0; k + 1 < subs.size(); ++k) {
      int a = subs[k], b = subs[k + 1];
      rows.push_back({{a, dofs.subdomains[a].node_to_dof[n], +1}, {b, dofs.subdomains[b].node_to_dof[n], -1}, n});
    }
  }
  return ConstraintMap(std::move(sizes), std::move(rows));
}

}  // namespace mts
