#include "snod/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <fmt/format.h>

namespace snod {

namespace {

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }

  void finish(double pad = 0.05) {
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double dx = (x1 - x0) * pad, dy = (y1 - y0) * pad;
    x0 -= dx, x1 += dx, y0 -= dy, y1 += dy;
  }
};

class Canvas {
 public:
  Canvas(Bounds b, bool equal_aspect, const std::string& title, const std::string& xlabel,
         const std::string& ylabel)
      : b_(b) {
    if (equal_aspect) {
      const double sx = kPlotW / (b_.x1 - b_.x0), sy = kPlotH / (b_.y1 - b_.y0);
      const double s = std::min(sx, sy);
      const double cx = 0.5 * (b_.x0 + b_.x1), cy = 0.5 * (b_.y0 + b_.y1);
      b_.x0 = cx - 0.5 * kPlotW / s, b_.x1 = cx + 0.5 * kPlotW / s;
      b_.y0 = cy - 0.5 * kPlotH / s, b_.y1 = cy + 0.5 * kPlotH / s;
    }
    out_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        kW, kH, kW, kH);
    out_ += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                        kW / 2, escape(title));
    axes(xlabel, ylabel);
  }

  double px(double x) const { return kLeft + (x - b_.x0) / (b_.x1 - b_.x0) * kPlotW; }
  double py(double y) const { return kTop + (b_.y1 - y) / (b_.y1 - b_.y0) * kPlotH; }

  void polyline(const std::vector<std::array<double, 2>>& pts, const std::string& color,
                double width, bool dotted) {
    if (pts.size() < 2) return;
    std::string d;
    for (const auto& p : pts) d += fmt::format("{:.2f},{:.2f} ", px(p[0]), py(p[1]));
    out_ += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"{} points=\"{}\"/>\n",
                        color, width, dotted ? " stroke-dasharray=\"2,3\"" : "", d);
  }

  void circle(double x, double y, double r, const std::string& stroke, const std::string& fill) {
    out_ += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" stroke=\"{}\" fill=\"{}\"/>\n",
                        px(x), py(y), r, stroke, fill);
  }

  void star(double x, double y, double r, const std::string& color) {
    std::string d;
    for (int k = 0; k < 10; ++k) {
      const double ang = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
      const double rr = k % 2 == 0 ? r : 0.4 * r;
      d += fmt::format("{:.2f},{:.2f} ", px(x) + rr * std::cos(ang), py(y) + rr * std::sin(ang));
    }
    out_ += fmt::format("<polygon points=\"{}\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
                        d, color);
  }

  void legend(int row, const std::string& color, const std::string& label, bool dotted = false) {
    const double x = kLeft + kPlotW - 150, y = kTop + 15 + 16 * row;
    out_ += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"{}/>\n", x, y,
        x + 20, y, color, dotted ? " stroke-dasharray=\"2,3\"" : "");
    out_ += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", x + 26, y + 4, escape(label));
  }

  std::string finish() {
    out_ += "</g>\n</svg>\n";
    return std::move(out_);
  }

 private:
  static constexpr int kW = 720, kH = 540, kLeft = 70, kTop = 40, kPlotW = 620, kPlotH = 440;

  void axes(const std::string& xlabel, const std::string& ylabel) {
    out_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                        kLeft, kTop, kPlotW, kPlotH);
    for (int i = 0; i <= 5; ++i) {
      const double xv = b_.x0 + (b_.x1 - b_.x0) * i / 5.0;
      const double yv = b_.y0 + (b_.y1 - b_.y0) * i / 5.0;
      out_ += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px(xv),
                          kTop + kPlotH + 16, xv);
      out_ += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6,
                          py(yv) + 4, yv);
    }
    out_ += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + kPlotW / 2,
                        kH - 8, escape(xlabel));
    out_ += fmt::format(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        kTop + kPlotH / 2, kTop + kPlotH / 2, escape(ylabel));
    // Everything drawn after this is clipped to the plot area.
    out_ += fmt::format(
        "<clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>\n",
        kLeft, kTop, kPlotW, kPlotH);
    out_ += "<g clip-path=\"url(#plot)\">\n";
  }

  Bounds b_;
  std::string out_;
};

// Splits points into runs of equal stability so line style can follow it.
template <class P, class X, class Y>
void draw_by_stability(Canvas& c, const std::vector<P>& pts, X x, Y y, const std::string& color) {
  std::size_t start = 0;
  const auto stable = [&](std::size_t i) { return pts[i].stability == Stability::Stable; };
  for (std::size_t i = 1; i <= pts.size(); ++i) {
    if (i < pts.size() && stable(i) == stable(start)) continue;
    std::vector<std::array<double, 2>> run;
    // Overlap by one point so consecutive runs join up.
    for (std::size_t k = start; k < std::min(i + 1, pts.size()); ++k) run.push_back({x(pts[k]), y(pts[k])});
    c.polyline(run, color, 2.0, !stable(start));
    start = i;
  }
}

}  // namespace

std::string bifurcation_svg(std::span<const BifurcationBranch> branches, const std::string& title) {
  Bounds b;
  for (const auto& br : branches) {
    for (const auto& p : br.points) b.add(p.u0, p.z);
  }
  b.finish();
  Canvas c(b, false, title, "u0", "z");
  for (const auto& br : branches) {
    draw_by_stability(c, br.points, [](const BranchPoint& p) { return p.u0; },
                      [](const BranchPoint& p) { return p.z; }, "black");
    for (const auto& f : br.fold_points) c.circle(f.u0, f.z, 4, "#d62728", "none");
  }
  c.legend(0, "black", "stable");
  c.legend(1, "black", "unstable", true);
  return c.finish();
}

std::string phase_plane_svg(const Nullclines& nc, std::span<const EquilibriumPoint> equilibria,
                            const Trajectory* traj, const std::string& title) {
  Bounds b;
  for (const auto& p : nc.z_nullcline) b.add(p.u_s, p.z);
  for (const auto& p : nc.us_nullcline) b.add(p.u_s, p.z);
  if (traj != nullptr) {
    for (std::size_t k = 0; k < traj->size(); ++k) b.add(traj->state(k, 0).u_s, traj->state(k, 0).z);
  }
  // The quartic grows fast; keep the view near the z-nullcline and the path.
  Bounds view;
  for (const auto& p : nc.z_nullcline) view.add(p.u_s, p.z);
  if (traj != nullptr) {
    for (std::size_t k = 0; k < traj->size(); ++k) view.add(traj->state(k, 0).u_s, traj->state(k, 0).z);
  }
  if (std::isfinite(view.x0)) b.x0 = view.x0, b.x1 = view.x1;
  b.finish();
  Canvas c(b, false, title, "u_s", "z");

  for (int id = 0; id <= 2; ++id) {
    std::vector<NullclinePoint> branch;
    for (const auto& p : nc.z_nullcline) {
      if (p.branch_id == id) branch.push_back(p);
    }
    draw_by_stability(c, branch, [](const NullclinePoint& p) { return p.u_s; },
                      [](const NullclinePoint& p) { return p.z; }, "#1f77b4");
  }
  std::vector<std::array<double, 2>> quartic;
  for (const auto& p : nc.us_nullcline) quartic.push_back({p.u_s, p.z});
  c.polyline(quartic, "#2ca02c", 2.0, false);
  if (traj != nullptr) {
    std::vector<std::array<double, 2>> path;
    const std::size_t stride = std::max<std::size_t>(1, traj->size() / 5000);
    for (std::size_t k = 0; k < traj->size(); k += stride) {
      path.push_back({traj->state(k, 0).u_s, traj->state(k, 0).z});
    }
    c.polyline(path, "#ff7f0e", 1.0, false);
  }
  for (const auto& e : equilibria) {
    const bool stable = e.stability == Stability::Stable;
    c.circle(e.u_s, e.z, 5, "black", stable ? "black" : "white");
  }
  c.legend(0, "#1f77b4", "z-nullcline");
  c.legend(1, "#2ca02c", "u_s-nullcline");
  if (traj != nullptr) c.legend(2, "#ff7f0e", "trajectory");
  return c.finish();
}

std::string timeseries_svg(const Trajectory& traj, const std::string& title) {
  Bounds b;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    for (std::size_t i = 0; i < traj.n_agents; ++i) b.add(traj.times[k], traj.state(k, i).z);
  }
  b.finish();
  Canvas c(b, false, title, "t", "z");
  const std::size_t stride = std::max<std::size_t>(1, traj.size() / 5000);
  for (std::size_t i = 0; i < traj.n_agents; ++i) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t k = 0; k < traj.size(); k += stride) pts.push_back({traj.times[k], traj.state(k, i).z});
    const std::string color = kPalette[i % kPalette.size()];
    c.polyline(pts, color, 1.5, false);
    if (i < 8) c.legend(static_cast<int>(i), color, fmt::format("agent {}", i));
  }
  return c.finish();
}

std::string scenario_svg(const ScenarioConfig& cfg, const ScenarioResult& result, const std::string& title) {
  Bounds b;
  for (const auto& s : result.samples) b.add(s.x, s.y);
  for (const auto& r : cfg.robots) b.add(r.goal.x, r.goal.y);
  std::vector<std::vector<std::array<double, 2>>> human_paths;
  for (const auto& h : cfg.humans) {
    std::vector<std::array<double, 2>> pts;
    for (const double t : result.times) {
      const Vec2 p = h.position(t);
      pts.push_back({p.x, p.y});
    }
    // Only the part near the robots is of interest.
    for (const auto& p : pts) {
      if (p[0] >= b.x0 - 2 && p[0] <= b.x1 + 2 && p[1] >= b.y0 - 4 && p[1] <= b.y1 + 4) b.add(p[0], p[1]);
    }
    human_paths.push_back(std::move(pts));
  }
  b.finish();
  Canvas c(b, true, title, "x [m]", "y [m]");
  for (const auto& pts : human_paths) {
    c.polyline(pts, "black", 2.0, false);
    if (!pts.empty()) c.circle(pts.back()[0], pts.back()[1], 4, "black", "black");
  }
  const std::size_t stride = std::max<std::size_t>(1, result.times.size() / 4000);
  for (std::size_t i = 0; i < result.n_robots; ++i) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t k = 0; k < result.times.size(); k += stride) pts.push_back({result.sample(k, i).x, result.sample(k, i).y});
    const auto& last = result.sample(result.times.size() - 1, i);
    pts.push_back({last.x, last.y});
    const std::string color = kPalette[i % kPalette.size()];
    c.polyline(pts, color, 2.0, false);
    c.circle(pts.front()[0], pts.front()[1], 4, color, "white");
    c.star(cfg.robots[i].goal.x, cfg.robots[i].goal.y, 9, color);
    if (i < 8) c.legend(static_cast<int>(i), color, fmt::format("robot {}", i));
  }
  return c.finish();
}

}  // namespace snod
