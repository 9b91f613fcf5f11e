#include "hafem/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace hafem {

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << std::setprecision(17);
  os << "VERTICES " << mesh.num_vertices() << '\n';
  for (const auto& p : mesh.vertices()) os << p.x() << ' ' << p.y() << '\n';
  os << "TRIANGLES " << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << " 0\n";
  const auto segments = mesh.boundary_segments();
  os << "BOUNDARY " << segments.size() << '\n';
  for (const auto& s : segments) os << s.a << ' ' << s.b << ' ' << s.marker << '\n';
  if (mesh.parent()) {
    os << "GENERATION " << mesh.generation() << '\n';
    os << "PARENTS " << mesh.parent_map().size() << '\n';
    for (Index p : mesh.parent_map()) os << p << '\n';
  }
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw MeshError("cannot open " + path.string() + " for writing");
  write_mesh(os, mesh);
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  bool next(std::istringstream& line) {
    std::string s;
    while (std::getline(is_, s)) {
      ++lineno_;
      if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
      line.clear();
      line.str(s);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw MeshError("mesh file line " + std::to_string(lineno_) + ": " + what);
  }

  long header(const std::string& keyword) {
    std::istringstream line;
    if (!next(line)) fail("expected " + keyword);
    std::string kw;
    long n = -1;
    if (!(line >> kw >> n) || kw != keyword || n < 0) fail("expected '" + keyword + " <count>'");
    return n;
  }

 private:
  std::istream& is_;
  int lineno_ = 0;
};

}  // namespace

MeshFile read_mesh(std::istream& is) {
  LineReader reader(is);
  std::istringstream line;

  const long nv = reader.header("VERTICES");
  std::vector<Vec2> verts(static_cast<std::size_t>(nv));
  for (auto& p : verts) {
    double x, y;
    if (!reader.next(line) || !(line >> x >> y)) reader.fail("expected vertex coordinates");
    p = Vec2(x, y);
  }

  const long nt = reader.header("TRIANGLES");
  std::vector<Triangle> tris(static_cast<std::size_t>(nt));
  for (auto& t : tris) {
    Index a, b, c;
    int ref;
    if (!reader.next(line) || !(line >> a >> b >> c >> ref)) reader.fail("expected 'v0 v1 v2 refEdgeLocalIndex'");
    if (ref < 0 || ref > 2) reader.fail("refinement edge index must be 0, 1 or 2");
    const std::array<Index, 3> v{a, b, c};
    t.v = {v[ref], v[(ref + 1) % 3], v[(ref + 2) % 3]};
  }

  const long nb = reader.header("BOUNDARY");
  std::vector<BoundarySegment> segments(static_cast<std::size_t>(nb));
  for (auto& s : segments) {
    if (!reader.next(line) || !(line >> s.a >> s.b >> s.marker)) reader.fail("expected 'va vb marker'");
  }

  MeshFile out;
  out.mesh = std::make_shared<Mesh>(std::move(verts), std::move(tris), segments);

  if (reader.next(line)) {
    std::string kw;
    line >> kw;
    if (kw != "GENERATION" || !(line >> out.generation)) reader.fail("expected GENERATION");
    const long np = reader.header("PARENTS");
    if (np != nt) reader.fail("PARENTS count must equal the triangle count");
    out.parents.resize(static_cast<std::size_t>(np));
    for (auto& p : out.parents) {
      if (!reader.next(line) || !(line >> p)) reader.fail("expected parent index");
    }
    out.has_lineage = true;
  }
  return out;
}

MeshFile read_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MeshError("cannot open mesh file " + path.string());
  return read_mesh(is);
}

MeshPtr attach_lineage(const MeshFile& file, const MeshPtr& parent) {
  auto m = std::make_shared<Mesh>(file.mesh->vertices(), file.mesh->triangles(), file.mesh->boundary_segments());
  if (parent) {
    if (!file.has_lineage) throw MeshError("mesh file carries no lineage");
    m->set_lineage(parent, file.parents);
  }
  return m;
}

}  // namespace hafem
