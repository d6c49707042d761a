#include <cmath>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "pitchfork/errors.hpp"
#include "pitchfork/model.hpp"

namespace pitchfork {

namespace {

using Point = std::array<double, 2>;

// Illinois false position on a bracketing edge, starting from linear
// interpolation of the node values.
Point refine_on_edge(const Point& a, const Point& b, double fa, double fb, double level,
                     const SystemParams& p) {
  auto at = [&](double t) { return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };
  auto f = [&](double t) {
    const Point q = at(t);
    return potential_energy(q[0], q[1], p) - level;
  };
  double lo = 0.0, hi = 1.0, flo = fa, fhi = fb;
  int side = 0;
  double t = flo / (flo - fhi);
  for (int it = 0; it < 100; ++it) {
    t = flo / (flo - fhi);
    t = lo + t * (hi - lo);
    const double ft = f(t);
    if (ft == 0.0 || hi - lo < 1e-15) break;
    if ((ft < 0.0) == (flo < 0.0)) {
      lo = t;
      flo = ft;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = t;
      fhi = ft;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (std::abs(ft) < 1e-14 * std::max(1.0, std::abs(level))) break;
  }
  return at(t);
}

}  // namespace

std::vector<Polyline> equipotential_contour(double level, const Window& window, int resolution,
                                            const SystemParams& p) {
  if (resolution < 16) throw std::invalid_argument("contour resolution must be at least 16");
  if (!(window.x.hi > window.x.lo && window.y.hi > window.y.lo)) {
    throw std::invalid_argument("contour window must have positive extent");
  }
  const int n = resolution;
  const double hx = (window.x.hi - window.x.lo) / (n - 1);
  const double hy = (window.y.hi - window.y.lo) / (n - 1);
  auto node = [&](int i, int j) { return Point{window.x.lo + i * hx, window.y.lo + j * hy}; };

  std::vector<double> f(static_cast<std::size_t>(n) * n);
  auto fv = [&](int i, int j) -> double& { return f[static_cast<std::size_t>(j) * n + i]; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point q = node(i, j);
      fv(i, j) = potential_energy(q[0], q[1], p) - level;
    }
  }
  auto above = [&](int i, int j) { return fv(i, j) >= 0.0; };

  // Edge ids: horizontal edges first, then vertical ones.
  const long n_horizontal = static_cast<long>(n - 1) * n;
  auto h_edge = [&](int i, int j) { return static_cast<long>(j) * (n - 1) + i; };
  auto v_edge = [&](int i, int j) { return n_horizontal + static_cast<long>(j) * n + i; };

  std::unordered_map<long, Point> vertex;
  auto crossing = [&](long id) -> std::optional<Point> {
    if (auto it = vertex.find(id); it != vertex.end()) return it->second;
    int i0, j0, i1, j1;
    if (id < n_horizontal) {
      i0 = static_cast<int>(id % (n - 1));
      j0 = static_cast<int>(id / (n - 1));
      i1 = i0 + 1;
      j1 = j0;
    } else {
      const long k = id - n_horizontal;
      i0 = static_cast<int>(k % n);
      j0 = static_cast<int>(k / n);
      i1 = i0;
      j1 = j0 + 1;
    }
    if (above(i0, j0) == above(i1, j1)) return std::nullopt;
    const Point q = refine_on_edge(node(i0, j0), node(i1, j1), fv(i0, j0), fv(i1, j1), level, p);
    vertex.emplace(id, q);
    return q;
  };

  std::vector<std::array<long, 2>> segments;
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const long bottom = h_edge(i, j), top = h_edge(i, j + 1);
      const long left = v_edge(i, j), right = v_edge(i + 1, j);
      std::vector<long> cut;
      for (long e : {bottom, right, top, left}) {
        if (crossing(e)) cut.push_back(e);
      }
      if (cut.size() == 2) {
        segments.push_back({cut[0], cut[1]});
      } else if (cut.size() == 4) {
        // Saddle cell: decide the pairing from the true value at the centre.
        const Point c{window.x.lo + (i + 0.5) * hx, window.y.lo + (j + 0.5) * hy};
        const bool centre_above = potential_energy(c[0], c[1], p) - level >= 0.0;
        if (centre_above == above(i, j)) {
          segments.push_back({bottom, right});
          segments.push_back({top, left});
        } else {
          segments.push_back({left, bottom});
          segments.push_back({right, top});
        }
      }
    }
  }
  if (segments.empty()) {
    throw EmptyContour("level " + std::to_string(level) + " does not cross the window");
  }

  std::unordered_map<long, std::vector<std::size_t>> touching;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    touching[segments[s][0]].push_back(s);
    touching[segments[s][1]].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);

  auto trace = [&](std::size_t first, long start_edge) {
    Polyline line;
    line.points.push_back(vertex.at(start_edge));
    long edge = start_edge;
    std::size_t seg = first;
    while (true) {
      used[seg] = true;
      edge = segments[seg][0] == edge ? segments[seg][1] : segments[seg][0];
      line.points.push_back(vertex.at(edge));
      std::optional<std::size_t> next;
      for (std::size_t cand : touching[edge]) {
        if (!used[cand]) next = cand;
      }
      if (!next) break;
      seg = *next;
    }
    line.closed = edge == start_edge && line.points.size() > 2;
    return line;
  };

  std::vector<Polyline> lines;
  // Open lines start and end on the window boundary: begin at degree-one edges.
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    for (long e : segments[s]) {
      if (touching[e].size() == 1 && !used[s]) lines.push_back(trace(s, e));
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!used[s]) lines.push_back(trace(s, segments[s][0]));
  }
  return lines;
}

}  // namespace pitchfork
