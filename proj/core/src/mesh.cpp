#include "pfgl/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace pfgl {

namespace {

constexpr double kRelTol = 1e-9;

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Signed parameter of p along segment a->b; distance to the line must be
// checked separately.
double line_param(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 d = b - a;
  return d.dot(p - a) / d.squaredNorm();
}

double line_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 d = b - a;
  const double cross = d.x() * (p - a).y() - d.y() * (p - a).x();
  return std::abs(cross) / d.norm();
}

}  // namespace

double QuadMesh::diameter() const {
  if (nodes.empty()) return 0.0;
  Vec2 lo = nodes.front(), hi = nodes.front();
  for (const auto& p : nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

void QuadMesh::rebuild_edges() {
  edges.clear();
  edge_lookup.clear();
  edges.reserve(elements.size() * 2);
  for (int e = 0; e < n_elements(); ++e) {
    const auto& c = elements[e];
    for (int k = 0; k < 4; ++k) {
      const int a = c[k], b = c[(k + 1) % 4];
      const auto key = edge_key(a, b);
      auto it = edge_lookup.find(key);
      if (it == edge_lookup.end()) {
        MeshEdge me;
        me.a = std::min(a, b);
        me.b = std::max(a, b);
        me.elems[0] = e;
        me.count = 1;
        edge_lookup.emplace(key, static_cast<int>(edges.size()));
        edges.push_back(me);
      } else {
        MeshEdge& me = edges[it->second];
        require(me.count < 2, "edge (", me.a, ",", me.b, ") incident to more than two elements");
        me.elems[1] = e;
        me.count = 2;
      }
    }
  }
}

std::vector<int> QuadMesh::elements_tagged(Region r) const {
  std::vector<int> out;
  for (int e = 0; e < n_elements(); ++e)
    if (element_tags[e] == r) out.push_back(e);
  return out;
}

void QuadMesh::apply_seam(const SeamSpec& seam) {
  const double tol = kRelTol * std::max(diameter(), 1.0);
  require(seam.x1 > seam.x0 + tol, "seam span is empty");

  Vec2 lo = nodes.front(), hi = nodes.front();
  for (const auto& p : nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }

  auto endpoint_open = [&](double x) {
    // An endpoint on the outer boundary opens the crack mouth; an interior
    // endpoint is the tip and keeps a single node.
    return close(x, lo.x(), tol) || close(x, hi.x(), tol);
  };

  std::vector<int> to_split;
  for (int n = 0; n < n_nodes(); ++n) {
    const Vec2& p = nodes[n];
    if (!close(p.y(), seam.yline, tol)) continue;
    if (p.x() < seam.x0 - tol || p.x() > seam.x1 + tol) continue;
    const bool interior = p.x() > seam.x0 + tol && p.x() < seam.x1 - tol;
    const bool at0 = close(p.x(), seam.x0, tol);
    const bool at1 = close(p.x(), seam.x1, tol);
    if (interior || (at0 && endpoint_open(seam.x0)) || (at1 && endpoint_open(seam.x1)))
      to_split.push_back(n);
  }
  require(!to_split.empty(), "seam y=", seam.yline, " x in [", seam.x0, ",", seam.x1,
          "] does not lie on a mesh line");

  // node -> incident elements
  std::vector<std::vector<int>> incident(n_nodes());
  for (int e = 0; e < n_elements(); ++e)
    for (int k = 0; k < 4; ++k) incident[elements[e][k]].push_back(e);

  for (int n : to_split) {
    bool above = false, below = false;
    for (int e : incident[n]) {
      (centroid(e).y() > seam.yline ? above : below) = true;
    }
    require(above && below, "seam node ", n, " is not interior to the mesh in y");
    const int dup = n_nodes();
    nodes.push_back(nodes[n]);
    for (int e : incident[n]) {
      if (centroid(e).y() > seam.yline) {
        for (int k = 0; k < 4; ++k)
          if (elements[e][k] == n) elements[e][k] = dup;
      }
    }
    notch_seams.emplace_back(n, dup);
  }
  seam_specs.push_back(seam);
  rebuild_edges();
}

QuadMesh build_structured_mesh(double width, double height, int nx, int ny,
                               const std::vector<SeamSpec>& seams,
                               const std::optional<CutoutSpec>& cutout) {
  require(nx >= 1 && ny >= 1, "build_structured_mesh: nx, ny must be >= 1");
  require(width > 0 && height > 0, "build_structured_mesh: degenerate extent");

  const double hx = width / nx, hy = height / ny;
  const double tol = kRelTol * std::hypot(width, height);

  for (const auto& s : seams) {
    const double jy = s.yline / hy;
    require(close(jy, std::round(jy), 1e-6) && s.yline > tol && s.yline < height - tol,
            "notch at y=", s.yline, " is not on an interior mesh line (hy=", hy, ")");
    const double i0 = s.x0 / hx, i1 = s.x1 / hx;
    require(close(i0, std::round(i0), 1e-6) && close(i1, std::round(i1), 1e-6),
            "notch ends x=[", s.x0, ",", s.x1, "] are not on mesh lines (hx=", hx, ")");
  }

  QuadMesh m;
  m.nx = nx;
  m.ny = ny;
  m.width = width;
  m.height = height;
  m.nodes.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) m.nodes.emplace_back(i * hx, j * hy);

  auto nid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 c((i + 0.5) * hx, (j + 0.5) * hy);
      if (cutout && cutout->contains(c)) continue;
      m.elements.push_back({nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)});
    }

  if (cutout) {
    // compact away orphan nodes
    std::vector<int> remap(m.nodes.size(), -1);
    std::vector<Vec2> kept;
    for (const auto& el : m.elements)
      for (int k = 0; k < 4; ++k) remap[el[k]] = 0;
    for (std::size_t n = 0; n < m.nodes.size(); ++n)
      if (remap[n] == 0) {
        remap[n] = static_cast<int>(kept.size());
        kept.push_back(m.nodes[n]);
      }
    for (auto& el : m.elements)
      for (int k = 0; k < 4; ++k) el[k] = remap[el[k]];
    m.nodes = std::move(kept);
  }

  m.element_tags.assign(m.elements.size(), Region::Global);
  m.stiffness_scale.assign(m.elements.size(), 1.0);
  m.rebuild_edges();
  for (const auto& s : seams) m.apply_seam(s);
  return m;
}

double InterfaceTrace::length() const {
  double s = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) s += edge_length(static_cast<int>(e));
  return s;
}

std::vector<int> InterfaceTrace::nodes() const {
  std::set<int> s;
  for (const auto& e : edges) {
    s.insert(e.n0);
    s.insert(e.n1);
  }
  return {s.begin(), s.end()};
}

InterfaceTrace extract_interface(const QuadMesh& mesh, Region region,
                                 bool include_domain_boundary) {
  InterfaceTrace tr;
  tr.mesh = &mesh;
  tr.side = region;
  for (const auto& me : mesh.edges) {
    int owner = -1, outer = -1, in_count = 0;
    for (int s = 0; s < me.count; ++s) {
      const int e = me.elems[s];
      if (mesh.element_tags[e] == region) {
        ++in_count;
        owner = e;
      } else {
        outer = e;
      }
    }
    if (in_count != 1) continue;  // inner edge of the region, or not touching it
    if (outer < 0 && !include_domain_boundary) continue;

    TraceEdge te;
    te.owner_elem = owner;
    te.outer_elem = outer;
    // orient so the owner element stays on the left
    const auto& c = mesh.elements[owner];
    te.n0 = me.a;
    te.n1 = me.b;
    for (int k = 0; k < 4; ++k) {
      if (c[k] == me.a && c[(k + 1) % 4] == me.b) break;
      if (c[k] == me.b && c[(k + 1) % 4] == me.a) {
        std::swap(te.n0, te.n1);
        break;
      }
    }
    tr.edges.push_back(te);
  }
  return tr;
}

namespace {

struct SeamQuery {
  const std::vector<SeamSpec>* seams;
  double tol;
  double xmin, xmax;

  // Line of the seam (if any) that splits a point; endpoints split only when
  // they reach the outer boundary (open crack mouth), interior endpoints are
  // shared tips.
  std::optional<double> split_line(const Vec2& p) const {
    if (!seams) return std::nullopt;
    for (const auto& s : *seams) {
      if (!close(p.y(), s.yline, tol)) continue;
      const bool interior = p.x() > s.x0 + tol && p.x() < s.x1 - tol;
      const bool mouth0 = close(p.x(), s.x0, tol) &&
                          (close(s.x0, xmin, tol) || close(s.x0, xmax, tol));
      const bool mouth1 = close(p.x(), s.x1, tol) &&
                          (close(s.x1, xmin, tol) || close(s.x1, xmax, tol));
      if (interior || mouth0 || mouth1) return s.yline;
    }
    return std::nullopt;
  }
};

Vec2 bilinear(const std::array<Vec2, 4>& X, double u, double v) {
  return (1 - u) * (1 - v) * X[0] + u * (1 - v) * X[1] + u * v * X[2] + (1 - u) * v * X[3];
}

// Acquire-or-create a refined node identified by provenance; the requesting
// subcell's centroid decides the seam side for on-seam nodes.
int acquire_node(LocalMesh& lm, const QuadMesh& gm, int parent, int p, int q, int f,
                 const SeamQuery& sq, const Vec2& cell_centroid) {
  const auto& c = gm.elements[parent];
  const std::array<Vec2, 4> X{gm.nodes[c[0]], gm.nodes[c[1]], gm.nodes[c[2]], gm.nodes[c[3]]};
  NodeOrigin o;
  const bool pi = (p == 0 || p == f), qi = (q == 0 || q == f);
  if (pi && qi) {
    o.kind = NodeOrigin::ParentNode;
    o.a = c[(p == 0) ? (q == 0 ? 0 : 3) : (q == 0 ? 1 : 2)];
  } else if (pi || qi) {
    o.kind = NodeOrigin::ParentEdge;
    int na, nb, k;
    if (q == 0) {
      na = c[0]; nb = c[1]; k = p;
    } else if (q == f) {
      na = c[3]; nb = c[2]; k = p;
    } else if (p == 0) {
      na = c[0]; nb = c[3]; k = q;
    } else {
      na = c[1]; nb = c[2]; k = q;
    }
    if (na < nb) {
      o.a = na; o.b = nb; o.i = k;
    } else {
      o.a = nb; o.b = na; o.i = f - k;
    }
  } else {
    o.kind = NodeOrigin::ParentCell;
    o.a = parent;
    o.i = p;
    o.j = q;
  }

  const Vec2 pos = bilinear(X, double(p) / f, double(q) / f);
  if (o.kind != NodeOrigin::ParentCell) {
    if (const auto line = sq.split_line(pos))
      o.seam_side = cell_centroid.y() > *line ? std::int8_t(1) : std::int8_t(-1);
  }

  auto it = lm.node_of.find(o);
  if (it != lm.node_of.end()) return it->second;
  const int id = lm.mesh.n_nodes();
  lm.mesh.nodes.push_back(pos);
  lm.node_of.emplace(o, id);
  return id;
}

void refine_parents(LocalMesh& lm, const QuadMesh& gm, const std::vector<int>& element_ids,
                    const StiffnessField& stiffness) {
  const double tol = kRelTol * std::max(gm.diameter(), 1.0);
  Vec2 lo = gm.nodes.front(), hi = gm.nodes.front();
  for (const auto& p : gm.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  SeamQuery sq{&lm.mesh.seam_specs, tol, lo.x(), hi.x()};

  std::vector<int> ids = element_ids;
  std::sort(ids.begin(), ids.end());
  const int f = lm.factor;
  for (int parent : ids) {
    require(parent >= 0 && parent < gm.n_elements(), "refine: element id ", parent,
            " out of range");
    require(!lm.parents.count(parent), "refine: element ", parent, " already refined");
    lm.parents.insert(parent);
    const auto& c = gm.elements[parent];
    const std::array<Vec2, 4> X{gm.nodes[c[0]], gm.nodes[c[1]], gm.nodes[c[2]], gm.nodes[c[3]]};
    for (int j = 0; j < f; ++j)
      for (int i = 0; i < f; ++i) {
        const Vec2 cc = bilinear(X, (i + 0.5) / f, (j + 0.5) / f);
        const int n0 = acquire_node(lm, gm, parent, i, j, f, sq, cc);
        const int n1 = acquire_node(lm, gm, parent, i + 1, j, f, sq, cc);
        const int n2 = acquire_node(lm, gm, parent, i + 1, j + 1, f, sq, cc);
        const int n3 = acquire_node(lm, gm, parent, i, j + 1, f, sq, cc);
        lm.mesh.elements.push_back({n0, n1, n2, n3});
        lm.mesh.element_tags.push_back(Region::Local);
        lm.mesh.stiffness_scale.push_back(stiffness ? stiffness(cc) : 1.0);
        lm.parent_elem.push_back(parent);
      }
  }
  lm.mesh.rebuild_edges();
}

}  // namespace

LocalMesh refine_region_to_local(const QuadMesh& global_mesh,
                                 const std::vector<int>& element_ids, int factor,
                                 const StiffnessField& stiffness,
                                 const std::vector<SeamSpec>& seams) {
  require(factor >= 1, "refine_region_to_local: factor must be >= 1");
  require(!element_ids.empty(), "refine_region_to_local: empty element set");
  LocalMesh lm;
  lm.factor = factor;
  lm.mesh.seam_specs = seams;
  refine_parents(lm, global_mesh, element_ids, stiffness);

  // record duplicated seam pairs (same provenance up to side)
  for (auto it = lm.node_of.begin(); it != lm.node_of.end(); ++it) {
    if (it->first.seam_side != -1) continue;
    NodeOrigin o = it->first;
    o.seam_side = 1;
    auto jt = lm.node_of.find(o);
    if (jt != lm.node_of.end()) lm.mesh.notch_seams.emplace_back(it->second, jt->second);
  }
  return lm;
}

void extend_local_mesh(LocalMesh& local, const QuadMesh& global_mesh,
                       const std::vector<int>& element_ids,
                       const StiffnessField& stiffness) {
  require(!element_ids.empty(), "extend_local_mesh: empty element set");
  refine_parents(local, global_mesh, element_ids, stiffness);
}

InterfaceTrace project_interface(ProjectionDirection, const InterfaceTrace& trace,
                                 const QuadMesh& target_mesh,
                                 std::vector<int>* parent_of_child) {
  const double tol = kRelTol * std::max(target_mesh.diameter(), 1.0);
  InterfaceTrace out;
  out.mesh = &target_mesh;
  out.side = trace.side;
  if (parent_of_child) parent_of_child->clear();

  std::set<std::pair<int, int>> seen;
  for (std::size_t se = 0; se < trace.edges.size(); ++se) {
    const Vec2 A = trace.mesh->nodes[trace.edges[se].n0];
    const Vec2 B = trace.mesh->nodes[trace.edges[se].n1];
    const double len = (B - A).norm();

    struct Child {
      double t0;
      TraceEdge e;
      double overlap;
    };
    std::vector<Child> children;
    double covered = 0;
    for (const auto& me : target_mesh.edges) {
      const Vec2 P = target_mesh.nodes[me.a], Q = target_mesh.nodes[me.b];
      if (line_distance(A, B, P) > tol || line_distance(A, B, Q) > tol) continue;
      double tp = line_param(A, B, P), tq = line_param(A, B, Q);
      int n0 = me.a, n1 = me.b;
      if (tp > tq) {
        std::swap(tp, tq);
        std::swap(n0, n1);
      }
      const double o0 = std::max(tp, 0.0), o1 = std::min(tq, 1.0);
      if (o1 - o0 <= tol / std::max(len, tol)) continue;
      Child ch;
      ch.t0 = tp;
      ch.overlap = (o1 - o0) * len;
      ch.e.n0 = n0;
      ch.e.n1 = n1;
      int owner = me.elems[0];
      if (me.count == 2 && target_mesh.element_tags[me.elems[1]] == Region::Fictitious)
        owner = me.elems[1];
      ch.e.owner_elem = owner;
      ch.e.outer_elem = me.count == 2 ? (owner == me.elems[0] ? me.elems[1] : me.elems[0]) : -1;
      children.push_back(ch);
      covered += ch.overlap;
    }
    require(covered >= len - tol * 10, "project_interface: segment ", se, " [(", A.x(), ",",
            A.y(), ")-(", B.x(), ",", B.y(), ")] not covered by target mesh edges");
    std::sort(children.begin(), children.end(),
              [](const Child& a, const Child& b) { return a.t0 < b.t0; });
    for (const auto& ch : children) {
      auto key = std::minmax(ch.e.n0, ch.e.n1);
      if (!seen.insert(key).second) continue;
      out.edges.push_back(ch.e);
      if (parent_of_child) parent_of_child->push_back(static_cast<int>(se));
    }
  }
  return out;
}

std::vector<int> pair_trace_edges(const InterfaceTrace& local_trace,
                                  const InterfaceTrace& global_trace) {
  const double tol =
      kRelTol * std::max(global_trace.mesh ? global_trace.mesh->diameter() : 1.0, 1.0);
  std::vector<int> parent(local_trace.edges.size(), -1);
  for (std::size_t le = 0; le < local_trace.edges.size(); ++le) {
    const Vec2 mid = local_trace.point(static_cast<int>(le), 0.5);
    for (std::size_t ge = 0; ge < global_trace.edges.size(); ++ge) {
      const Vec2 A = global_trace.mesh->nodes[global_trace.edges[ge].n0];
      const Vec2 B = global_trace.mesh->nodes[global_trace.edges[ge].n1];
      if (line_distance(A, B, mid) > tol) continue;
      const double t = line_param(A, B, mid);
      if (t < -tol || t > 1 + tol) continue;
      parent[le] = static_cast<int>(ge);
      break;
    }
    require(parent[le] >= 0, "pair_trace_edges: local edge ", le,
            " has no containing global edge");
  }
  return parent;
}

}  // namespace pfgl
