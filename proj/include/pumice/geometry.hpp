#pragma once

#include "pumice/kdtree.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pumice {

enum class Label : std::uint8_t { Inner = 0, Outer = 1, Edge = 2, Unlabeled = 3 };

inline int label_to_int(Label l) { return static_cast<int>(l); }

inline Label label_from_int(int v) {
  require(v >= 0 && v <= 3, ErrorCode::ParseError, "label value out of range: " + std::to_string(v));
  return static_cast<Label>(v);
}

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Inner: return "inner";
    case Label::Outer: return "outer";
    case Label::Edge: return "edge";
    case Label::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

// Oriented point sample of a thin closed structure. Normals point out of the
// material. Labels tell the two sheets (and the junction band) apart; loaders
// leave them Unlabeled unless the file carries them.
template <int D>
struct OrientedPointCloud {
  std::vector<Vec<D>> points;
  std::vector<Vec<D>> normals;
  std::vector<Label> labels;

  int size() const { return static_cast<int>(points.size()); }

  bool has_labels() const {
    for (Label l : labels)
      if (l != Label::Unlabeled) return true;
    return false;
  }

  void validate() const {
    require(points.size() == normals.size() && points.size() == labels.size(),
            ErrorCode::DimensionMismatch, "points/normals/labels lengths differ");
    for (const auto& n : normals)
      require(std::abs(n.norm() - 1.0) <= 1e-8, ErrorCode::MissingNormals,
              "normal is not unit length");
  }

  // Rescale all normals to unit length. A zero normal cannot be oriented.
  void normalize_normals() {
    for (auto& n : normals) {
      double len = n.norm();
      require(len > 0.0, ErrorCode::MissingNormals, "zero-length normal");
      n /= len;
    }
  }

  Vec<D> centroid() const {
    Vec<D> g = Vec<D>::Zero();
    for (const auto& p : points) g += p;
    return points.empty() ? g : Vec<D>(g / static_cast<double>(points.size()));
  }
};

// Piecewise-linear surface: segments of a curve in 2d, triangles in 3d.
template <int D>
struct SurfaceMesh {
  std::vector<Vec<D>> vertices;
  std::vector<std::array<int, D>> elements;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }

  void validate() const {
    const int n = vertex_count();
    for (const auto& e : elements) {
      for (int v : e) require(v >= 0 && v < n, ErrorCode::ParseError, "element index out of range");
      for (int a = 0; a < D; ++a)
        for (int b = a + 1; b < D; ++b)
          require(e[a] != e[b], ErrorCode::DegenerateInput, "degenerate element (repeated vertex)");
    }
  }
};

enum class CloudFormat { Csv, Ply, Obj };

inline CloudFormat format_from_path(const std::string& path) {
  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "csv") return CloudFormat::Csv;
  if (ext == "ply") return CloudFormat::Ply;
  if (ext == "obj") return CloudFormat::Obj;
  fail(ErrorCode::InvalidArgument, "cannot infer format from path '" + path + "'");
}

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    require(pos == s.size(), ErrorCode::ParseError,
            "trailing characters in number '" + s + "' on line " + std::to_string(line_no));
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad number '" + s + "' on line " + std::to_string(line_no));
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::IoError, "cannot open '" + path + "' for reading");
  return f;
}

}  // namespace detail

// CSV rows: x..z, nx..nz, optional integer label. 4 or 5 columns in 2d,
// 6 or 7 in 3d; every row must agree. '#' starts a comment line.
template <int D>
OrientedPointCloud<D> load_cloud_csv(const std::string& path) {
  auto f = detail::open_in(path);
  OrientedPointCloud<D> cloud;
  std::string raw;
  int line_no = 0, cols = -1;
  while (std::getline(f, raw)) {
    ++line_no;
    std::string line = detail::strip_cr(raw);
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_csv(line);
    int nf = static_cast<int>(fields.size());
    require(nf == 4 || nf == 5 || nf == 6 || nf == 7, ErrorCode::ParseError,
            "expected 4-7 columns, got " + std::to_string(nf) + " on line " + std::to_string(line_no));
    if (cols < 0) {
      cols = nf;
      int file_dim = nf >= 6 ? 3 : 2;
      require(file_dim == D, ErrorCode::DimensionMismatch,
              "file is " + std::to_string(file_dim) + "d, expected " + std::to_string(D) + "d");
    }
    require(nf == cols, ErrorCode::DimensionMismatch,
            "mixed column counts on line " + std::to_string(line_no));
    Vec<D> p, n;
    for (int k = 0; k < D; ++k) p[k] = detail::parse_double(fields[k], line_no);
    for (int k = 0; k < D; ++k) n[k] = detail::parse_double(fields[D + k], line_no);
    Label lab = Label::Unlabeled;
    if (cols == 2 * D + 1)
      lab = label_from_int(static_cast<int>(detail::parse_double(fields[2 * D], line_no)));
    cloud.points.push_back(p);
    cloud.normals.push_back(n);
    cloud.labels.push_back(lab);
  }
  cloud.normalize_normals();
  return cloud;
}

template <int D>
void save_cloud_csv(const OrientedPointCloud<D>& cloud, const std::string& path) {
  auto f = detail::open_out(path);
  bool labeled = cloud.has_labels();
  for (int i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < D; ++k) f << cloud.points[i][k] << ',';
    for (int k = 0; k < D; ++k) {
      f << cloud.normals[i][k];
      if (k + 1 < D || labeled) f << ',';
    }
    if (labeled) f << label_to_int(cloud.labels[i]);
    f << '\n';
  }
  require(f.good(), ErrorCode::IoError, "write failed for '" + path + "'");
}

// Ascii PLY with a vertex element carrying x,y,z,nx,ny,nz and an optional
// label property. 3d only; non-vertex elements are skipped on load.
inline OrientedPointCloud<3> load_cloud_ply(const std::string& path) {
  auto f = detail::open_in(path);
  std::string line;
  require(std::getline(f, line) && detail::strip_cr(line) == "ply", ErrorCode::ParseError,
          "missing ply magic");
  struct ElementDecl {
    std::string name;
    long count = 0;
    std::vector<std::string> props;
  };
  std::vector<ElementDecl> elements;
  bool ascii = false;
  while (std::getline(f, line)) {
    line = detail::strip_cr(line);
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string kind;
      ss >> kind;
      require(kind == "ascii", ErrorCode::ParseError, "only ascii ply is supported");
      ascii = true;
    } else if (tok == "element") {
      ElementDecl e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      require(!elements.empty(), ErrorCode::ParseError, "property before element");
      std::string type, name;
      ss >> type >> name;
      if (type == "list") ss >> name >> name;  // list <count-type> <value-type> <name>
      elements.back().props.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else if (tok != "ply") {
      fail(ErrorCode::ParseError, "unexpected header token '" + tok + "'");
    }
  }
  require(ascii, ErrorCode::ParseError, "missing format declaration");

  OrientedPointCloud<3> cloud;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (long i = 0; i < e.count; ++i)
        require(static_cast<bool>(std::getline(f, line)), ErrorCode::ParseError,
                "truncated element '" + e.name + "'");
      continue;
    }
    auto col = [&](const char* name) {
      for (std::size_t k = 0; k < e.props.size(); ++k)
        if (e.props[k] == name) return static_cast<int>(k);
      return -1;
    };
    int ix = col("x"), iy = col("y"), iz = col("z");
    int inx = col("nx"), iny = col("ny"), inz = col("nz");
    int il = col("label");
    require(ix >= 0 && iy >= 0 && iz >= 0, ErrorCode::ParseError, "vertex element lacks x/y/z");
    require(inx >= 0 && iny >= 0 && inz >= 0, ErrorCode::MissingNormals,
            "vertex element lacks nx/ny/nz");
    for (long i = 0; i < e.count; ++i) {
      require(static_cast<bool>(std::getline(f, line)), ErrorCode::ParseError, "truncated vertex list");
      std::istringstream ss(detail::strip_cr(line));
      std::vector<double> vals;
      double v;
      while (ss >> v) vals.push_back(v);
      require(vals.size() >= e.props.size(), ErrorCode::ParseError,
              "short vertex row " + std::to_string(i));
      cloud.points.push_back(Vec<3>{vals[ix], vals[iy], vals[iz]});
      cloud.normals.push_back(Vec<3>{vals[inx], vals[iny], vals[inz]});
      cloud.labels.push_back(il >= 0 ? label_from_int(static_cast<int>(vals[il])) : Label::Unlabeled);
    }
  }
  cloud.normalize_normals();
  return cloud;
}

inline void save_cloud_ply(const OrientedPointCloud<3>& cloud, const std::string& path) {
  auto f = detail::open_out(path);
  bool labeled = cloud.has_labels();
  f << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) f << "property double " << p << "\n";
  if (labeled) f << "property int label\n";
  f << "end_header\n";
  for (int i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) f << cloud.points[i][k] << ' ';
    for (int k = 0; k < 3; ++k) {
      f << cloud.normals[i][k];
      if (k < 2 || labeled) f << ' ';
    }
    if (labeled) f << label_to_int(cloud.labels[i]);
    f << '\n';
  }
  require(f.good(), ErrorCode::IoError, "write failed for '" + path + "'");
}

// OBJ with vn records paired 1:1 with v records. 2d data lives in the z=0
// plane (both coordinates and normals). OBJ has no label channel.
template <int D>
OrientedPointCloud<D> load_cloud_obj(const std::string& path) {
  auto f = detail::open_in(path);
  std::vector<Vec<3>> vs, vns;
  std::string raw;
  int line_no = 0;
  while (std::getline(f, raw)) {
    ++line_no;
    std::istringstream ss(detail::strip_cr(raw));
    std::string tok;
    ss >> tok;
    if (tok == "v" || tok == "vn") {
      Vec<3> p;
      if (!(ss >> p[0] >> p[1] >> p[2]))
        fail(ErrorCode::ParseError, "bad " + tok + " record on line " + std::to_string(line_no));
      (tok == "v" ? vs : vns).push_back(p);
    }
  }
  require(!vns.empty(), ErrorCode::MissingNormals, "no vn records");
  require(vs.size() == vns.size(), ErrorCode::ParseError, "v and vn counts differ");
  if (D == 2)
    for (std::size_t i = 0; i < vs.size(); ++i)
      require(vs[i][2] == 0.0 && vns[i][2] == 0.0, ErrorCode::DimensionMismatch,
              "nonzero z in 2d obj data");
  OrientedPointCloud<D> cloud;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    cloud.points.push_back(vs[i].head<D>());
    cloud.normals.push_back(vns[i].head<D>());
    cloud.labels.push_back(Label::Unlabeled);
  }
  cloud.normalize_normals();
  return cloud;
}

template <int D>
void save_cloud_obj(const OrientedPointCloud<D>& cloud, const std::string& path) {
  auto f = detail::open_out(path);
  for (int i = 0; i < cloud.size(); ++i) {
    f << "v";
    for (int k = 0; k < D; ++k) f << ' ' << cloud.points[i][k];
    if (D == 2) f << " 0";
    f << "\nvn";
    for (int k = 0; k < D; ++k) f << ' ' << cloud.normals[i][k];
    if (D == 2) f << " 0";
    f << '\n';
  }
  require(f.good(), ErrorCode::IoError, "write failed for '" + path + "'");
}

template <int D>
OrientedPointCloud<D> load_cloud(const std::string& path, CloudFormat fmt) {
  switch (fmt) {
    case CloudFormat::Csv: return load_cloud_csv<D>(path);
    case CloudFormat::Ply:
      if constexpr (D == 3)
        return load_cloud_ply(path);
      else
        fail(ErrorCode::DimensionMismatch, "ply carries 3d data");
    case CloudFormat::Obj: return load_cloud_obj<D>(path);
  }
  fail(ErrorCode::InvalidArgument, "unknown format");
}

template <int D>
OrientedPointCloud<D> load_cloud(const std::string& path) {
  return load_cloud<D>(path, format_from_path(path));
}

template <int D>
void save_cloud(const OrientedPointCloud<D>& cloud, const std::string& path, CloudFormat fmt) {
  switch (fmt) {
    case CloudFormat::Csv: return save_cloud_csv<D>(cloud, path);
    case CloudFormat::Ply:
      if constexpr (D == 3)
        return save_cloud_ply(cloud, path);
      else
        fail(ErrorCode::DimensionMismatch, "ply carries 3d data");
    case CloudFormat::Obj: return save_cloud_obj<D>(cloud, path);
  }
  fail(ErrorCode::InvalidArgument, "unknown format");
}

template <int D>
void save_cloud(const OrientedPointCloud<D>& cloud, const std::string& path) {
  save_cloud<D>(cloud, path, format_from_path(path));
}

// Dimension of a cloud file: 2 or 3. Lets a caller pick the template
// instantiation before loading.
inline int cloud_file_dimension(const std::string& path, CloudFormat fmt) {
  if (fmt == CloudFormat::Ply) return 3;
  auto f = detail::open_in(path);
  std::string raw;
  int line_no = 0;
  while (std::getline(f, raw)) {
    ++line_no;
    std::string line = detail::strip_cr(raw);
    if (line.empty() || line[0] == '#') continue;
    if (fmt == CloudFormat::Csv) {
      int nf = static_cast<int>(detail::split_csv(line).size());
      require(nf >= 4 && nf <= 7, ErrorCode::ParseError,
              "expected 4-7 columns on line " + std::to_string(line_no));
      return nf >= 6 ? 3 : 2;
    }
    // obj: 2d iff every v/vn has z == 0
    std::istringstream ss(line);
    std::string tok;
    double x, y, z;
    ss >> tok;
    if ((tok == "v" || tok == "vn") && (ss >> x >> y >> z) && z != 0.0) return 3;
  }
  return fmt == CloudFormat::Obj ? 2 : 2;
}

inline int cloud_file_dimension(const std::string& path) {
  return cloud_file_dimension(path, format_from_path(path));
}

// Mesh OBJ: v records plus l (segment) or f (triangle) elements, 1-based.
template <int D>
SurfaceMesh<D> load_mesh_obj(const std::string& path) {
  auto f = detail::open_in(path);
  SurfaceMesh<D> mesh;
  std::string raw;
  int line_no = 0;
  while (std::getline(f, raw)) {
    ++line_no;
    std::istringstream ss(detail::strip_cr(raw));
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      Vec<3> p;
      if (!(ss >> p[0] >> p[1] >> p[2]))
        fail(ErrorCode::ParseError, "bad v record on line " + std::to_string(line_no));
      if (D == 2)
        require(p[2] == 0.0, ErrorCode::DimensionMismatch, "nonzero z in 2d obj data");
      mesh.vertices.push_back(p.head<D>());
    } else if ((tok == "l" && D == 2) || (tok == "f" && D == 3)) {
      std::array<int, D> e;
      std::vector<int> ids;
      std::string fld;
      while (ss >> fld) {
        // "i", "i/j", "i//k" all start with the vertex index
        ids.push_back(std::stoi(fld));
      }
      require(static_cast<int>(ids.size()) == D, ErrorCode::ParseError,
              "element arity mismatch on line " + std::to_string(line_no));
      for (int k = 0; k < D; ++k) e[k] = ids[k] - 1;
      mesh.elements.push_back(e);
    }
  }
  mesh.validate();
  return mesh;
}

template <int D>
void save_mesh_obj(const SurfaceMesh<D>& mesh, const std::string& path) {
  auto f = detail::open_out(path);
  for (const auto& v : mesh.vertices) {
    f << "v";
    for (int k = 0; k < D; ++k) f << ' ' << v[k];
    if (D == 2) f << " 0";
    f << '\n';
  }
  const char* tag = D == 2 ? "l" : "f";
  for (const auto& e : mesh.elements) {
    f << tag;
    for (int k = 0; k < D; ++k) f << ' ' << (e[k] + 1);
    f << '\n';
  }
  require(f.good(), ErrorCode::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Labeling

struct AnnotateParams {
  double anti_facing_dot = -0.3;  // normals at most this aligned count as the opposite sheet
  double sheet_dot = 0.3;         // minimum alignment for same-sheet graph edges
  double edge_ball_factor = 0.75;  // junction search ball, in units of the thickness estimate
  double edge_min_dot = 0.34202014332566871;  // cos 70 deg; below this within the ball -> junction
  double reclaim_dot = 0.9;       // pull a flagged point back onto a sheet it aligns with
  double sign_margin = 0.1;       // minimum |mean radial alignment| to call a sheet in or out
  int graph_k = 8;
  int thickness_k = 64;
};

// Label the two sheets of a thin structure from positions and normals alone.
//
// Sheets are split by cutting nearest-neighbor edges between anti-aligned
// normals. The junction band (where a sheet turns into the opposite one)
// betrays itself by near-perpendicular normals at close range: opposite
// sheets only ever show aligned or anti-aligned pairs, so any nearby pair in
// between marks a junction. Flagged points leave the graph before components
// are formed; a sheet is Inner when its normals on average point against the
// direction away from the cloud centroid. Flagged points sitting flush on a
// labeled sheet are reclaimed in one pass, so Edge survives only on the
// junction arc itself.
template <int D>
void annotate_labels(OrientedPointCloud<D>& cloud, const AnnotateParams& prm = {}) {
  const int m = cloud.size();
  require(m >= 2, ErrorCode::DegenerateInput, "not enough points to annotate");
  KdTree<D> tree(cloud.points);

  // separation scale: median distance to the nearest anti-facing point;
  // local spacing rides along from the same neighbor scan
  std::vector<double> opp(m, std::numeric_limits<double>::infinity());
  std::vector<double> spacing(m, 0.0);
  int kq = std::min(m - 1, prm.thickness_k);
  for (int i = 0; i < m; ++i) {
    auto nn = tree.knn(cloud.points[i], kq, i);
    int ns = std::min<int>(6, static_cast<int>(nn.size()));
    for (int t = 0; t < ns; ++t) spacing[i] += (cloud.points[i] - cloud.points[nn[t]]).norm() / ns;
    for (int j : nn) {
      if (cloud.normals[i].dot(cloud.normals[j]) < prm.anti_facing_dot) {
        opp[i] = (cloud.points[i] - cloud.points[j]).norm();
        break;  // knn is sorted by distance
      }
    }
  }
  std::vector<double> finite;
  for (double v : opp)
    if (std::isfinite(v)) finite.push_back(v);
  require(finite.size() * 5 >= static_cast<std::size_t>(m), ErrorCode::AnnotationAmbiguous,
          "cannot estimate sheet separation (single-sheet data?)");
  std::nth_element(finite.begin(), finite.begin() + finite.size() / 2, finite.end());
  const double sep = finite[finite.size() / 2];

  // junction flags: a near-perpendicular pair within the ball
  std::vector<char> edge_flag(m, 0);
  std::vector<double> ball(m);
  for (int i = 0; i < m; ++i) {
    ball[i] = std::max(prm.edge_ball_factor * sep, 2.0 * spacing[i]);
    for (int j : tree.radius(cloud.points[i], ball[i])) {
      if (j == i) continue;
      double d = cloud.normals[i].dot(cloud.normals[j]);
      if (d > prm.anti_facing_dot && d < prm.edge_min_dot) {
        edge_flag[i] = 1;
        break;
      }
    }
  }

  // same-sheet graph over unflagged points, components by union-find
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int gk = std::min(m - 1, prm.graph_k);
  for (int i = 0; i < m; ++i) {
    if (edge_flag[i]) continue;
    for (int j : tree.knn(cloud.points[i], gk, i)) {
      if (edge_flag[j]) continue;
      if (cloud.normals[i].dot(cloud.normals[j]) > prm.sheet_dot) parent[find(i)] = find(j);
    }
  }

  // orientation of each component relative to the cloud centroid
  const Vec<D> g = cloud.centroid();
  std::vector<double> comp_sign(m, 0.0);
  std::vector<int> comp_count(m, 0);
  for (int i = 0; i < m; ++i) {
    if (edge_flag[i]) continue;
    Vec<D> r = cloud.points[i] - g;
    double len = r.norm();
    if (len == 0.0) continue;
    int c = find(i);
    comp_sign[c] += cloud.normals[i].dot(r) / len;
    comp_count[c] += 1;
  }
  for (int i = 0; i < m; ++i) {
    if (edge_flag[i]) {
      cloud.labels[i] = Label::Edge;
      continue;
    }
    int c = find(i);
    require(comp_count[c] > 0, ErrorCode::AnnotationAmbiguous,
            "point " + std::to_string(i) + " sits at the cloud centroid");
    double s = comp_sign[c] / comp_count[c];
    require(std::abs(s) >= prm.sign_margin, ErrorCode::AnnotationAmbiguous,
            "sheet orientation unresolved at point " + std::to_string(i));
    cloud.labels[i] = s < 0.0 ? Label::Inner : Label::Outer;
  }

  // reclaim flagged points flush against a sheet. The flag ball reaches at
  // most two sample spacings, so two staged passes over the same ball cover
  // the band; capping the passes keeps adoption from creeping along the
  // junction arc itself.
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<std::pair<int, Label>> adopt;
    for (int i = 0; i < m; ++i) {
      if (cloud.labels[i] != Label::Edge) continue;
      double best = prm.reclaim_dot;
      Label pick = Label::Edge;
      for (int j : tree.radius(cloud.points[i], ball[i])) {
        if (cloud.labels[j] != Label::Inner && cloud.labels[j] != Label::Outer) continue;
        double d = cloud.normals[i].dot(cloud.normals[j]);
        if (d >= best) {
          best = d;
          pick = cloud.labels[j];
        }
      }
      if (pick != Label::Edge) adopt.emplace_back(i, pick);
    }
    for (auto& [i, l] : adopt) cloud.labels[i] = l;
  }

  int sheet_total = 0;
  for (int i = 0; i < m; ++i)
    if (cloud.labels[i] == Label::Inner || cloud.labels[i] == Label::Outer) ++sheet_total;
  require(sheet_total * 2 >= m, ErrorCode::AnnotationAmbiguous,
          "junction band swallows most of the cloud (single-sheet data?)");
}

// The mesh is accepted for interface completeness; labeling needs only the
// oriented points themselves.
template <int D>
void annotate_labels(OrientedPointCloud<D>& cloud, const SurfaceMesh<D>& mesh,
                     const AnnotateParams& prm = {}) {
  (void)mesh;
  annotate_labels(cloud, prm);
}

}  // namespace pumice
