#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "pfgl/types.hpp"

namespace pfgl {

// Horizontal duplicated-node seam (predefined crack) along y = yline,
// spanning x in [x0, x1]. Endpoints on the domain boundary open the crack
// mouth there; an interior endpoint is the crack tip and stays a single node.
struct SeamSpec {
  double yline = 0.0;
  double x0 = 0.0;
  double x1 = 0.0;
};

// Rectangular block of elements removed from the structured grid
// (re-entrant geometries such as the L-shaped panel).
struct CutoutSpec {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool contains(const Vec2& c) const {
    return c.x() > xmin && c.x() < xmax && c.y() > ymin && c.y() < ymax;
  }
};

struct MeshEdge {
  int a = -1, b = -1;              // node ids, a < b
  std::array<int, 2> elems{-1, -1};
  int count = 0;                   // incident element count (1 = boundary/crack face)
};

struct QuadMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> elements;  // counterclockwise
  std::vector<Region> element_tags;
  std::vector<double> stiffness_scale;       // per-element Young's-modulus factor
  std::vector<MeshEdge> edges;
  std::unordered_map<std::uint64_t, int> edge_lookup;  // key(a,b) -> edge id
  std::vector<std::pair<int, int>> notch_seams;        // (original, duplicate) node pairs
  std::vector<SeamSpec> seam_specs;

  // Structured provenance (set by build_structured_mesh; refined meshes keep 0).
  int nx = 0, ny = 0;
  double width = 0, height = 0;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }

  static std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }
  int edge_id(int a, int b) const {
    auto it = edge_lookup.find(edge_key(a, b));
    return it == edge_lookup.end() ? -1 : it->second;
  }

  Vec2 centroid(int e) const {
    const auto& c = elements[e];
    return 0.25 * (nodes[c[0]] + nodes[c[1]] + nodes[c[2]] + nodes[c[3]]);
  }
  double diameter() const;
  void rebuild_edges();
  std::vector<int> elements_tagged(Region r) const;

  // Duplicated-node seam applied to an existing mesh (used both by the
  // structured builder and by local refinement).
  void apply_seam(const SeamSpec& seam);
};

// One oriented interface segment; walking n0 -> n1 keeps the owning region
// on the left, so the outward normal of the region points to the right.
struct TraceEdge {
  int n0 = -1, n1 = -1;
  int owner_elem = -1;  // element inside the region
  int outer_elem = -1;  // element on the other side (-1 on domain boundary)
};

struct InterfaceTrace {
  const QuadMesh* mesh = nullptr;
  Region side = Region::Global;
  std::vector<TraceEdge> edges;

  bool empty() const { return edges.empty(); }
  double length() const;
  std::vector<int> nodes() const;  // unique node ids, ascending
  Vec2 point(int edge, double t) const {
    const auto& e = edges[edge];
    return (1.0 - t) * mesh->nodes[e.n0] + t * mesh->nodes[e.n1];
  }
  double edge_length(int edge) const {
    const auto& e = edges[edge];
    return (mesh->nodes[e.n1] - mesh->nodes[e.n0]).norm();
  }
};

// Provenance of a refined-mesh node in its parent mesh. Keys make the
// conforming glue between refinement patches exact and keep seam faces
// separate (topology decides, never coordinates).
struct NodeOrigin {
  enum Kind : std::uint8_t { ParentNode = 0, ParentEdge = 1, ParentCell = 2 };
  Kind kind = ParentNode;
  int a = -1, b = -1;  // node id | edge (lo,hi) | element id
  int i = 0, j = 0;    // subdivision indices
  std::int8_t seam_side = 0;

  bool operator<(const NodeOrigin& o) const {
    return std::tie(kind, a, b, i, j, seam_side) <
           std::tie(o.kind, o.a, o.b, o.i, o.j, o.seam_side);
  }
};

// Standalone fine mesh refined from a set of parent (global) elements.
struct LocalMesh {
  QuadMesh mesh;
  int factor = 1;
  std::vector<int> parent_elem;        // per local element
  std::map<NodeOrigin, int> node_of;   // provenance -> local node id
  std::set<int> parents;               // refined parent element ids

  int n_nodes() const { return mesh.n_nodes(); }
};

using StiffnessField = std::function<double(const Vec2&)>;

QuadMesh build_structured_mesh(double width, double height, int nx, int ny,
                               const std::vector<SeamSpec>& seams = {},
                               const std::optional<CutoutSpec>& cutout = std::nullopt);

// Edges incident to exactly one element of `region` (shared-edge rule).
// Domain-boundary edges are dropped unless include_domain_boundary is set.
InterfaceTrace extract_interface(const QuadMesh& mesh, Region region,
                                 bool include_domain_boundary = false);

LocalMesh refine_region_to_local(const QuadMesh& global_mesh,
                                 const std::vector<int>& element_ids, int factor,
                                 const StiffnessField& stiffness = nullptr,
                                 const std::vector<SeamSpec>& seams = {});

// Extend an existing local mesh by refined versions of additional parent
// elements, reusing provenance so the glue is conforming and seams survive.
void extend_local_mesh(LocalMesh& local, const QuadMesh& global_mesh,
                       const std::vector<int>& element_ids,
                       const StiffnessField& stiffness = nullptr);

enum class ProjectionDirection { GlobalToLocal, LocalToGlobal };

// Re-expresses `trace` in edges of `target`; also emits the parent map
// child edge -> source edge (identity when meshes match).
InterfaceTrace project_interface(ProjectionDirection dir, const InterfaceTrace& trace,
                                 const QuadMesh& target_mesh,
                                 std::vector<int>* parent_of_child = nullptr);

// Pairs each local trace edge with the global trace edge containing it.
std::vector<int> pair_trace_edges(const InterfaceTrace& local_trace,
                                  const InterfaceTrace& global_trace);

}  // namespace pfgl
