#include "consensus/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace consensus {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

constexpr double kLogFloor = 1e-16;  // clamp for the log-scale axis

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void write_csv(const SimulationTrace& trace,
               const std::vector<int>& follower_ids, const std::string& path) {
  std::ofstream out = open_or_throw(path);
  out << "t";
  for (int id : follower_ids) out << ",err_" << id;
  for (int id : follower_ids) out << ",relerr_" << id;
  out << "\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out << fmt_double(trace.times[k]);
    for (Eigen::Index i = 0; i < trace.errors[k].size(); ++i) {
      out << "," << fmt_double(trace.errors[k](i));
    }
    for (Eigen::Index i = 0; i < trace.rel_errors[k].size(); ++i) {
      out << "," << fmt_double(trace.rel_errors[k](i));
    }
    out << "\n";
  }
}

void write_svg(const SimulationTrace& trace,
               const std::vector<int>& follower_ids, const std::string& path) {
  const double width = 960, height = 540;
  const double ml = 70, mr = 170, mt = 40, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double t_max = 1.0;
  double v_min = kLogFloor, v_max = 1.0;
  const bool empty = trace.times.empty();
  if (!empty) {
    t_max = std::max(trace.times.back(), 1e-12);
    v_min = std::numeric_limits<double>::infinity();
    v_max = 0.0;
    for (const auto& e : trace.errors) {
      for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double v = std::max(e(i), kLogFloor);
        v_min = std::min(v_min, v);
        v_max = std::max(v_max, v);
      }
    }
    if (!(v_max > 0)) {
      v_min = kLogFloor;
      v_max = 1.0;
    }
  }
  double lo = std::floor(std::log10(v_min));
  double hi = std::ceil(std::log10(v_max));
  if (hi <= lo) hi = lo + 1;

  const auto sx = [&](double t) { return ml + pw * t / t_max; };
  const auto sy = [&](double v) {
    const double lv = std::log10(std::max(v, kLogFloor));
    return mt + ph * (hi - lv) / (hi - lo);
  };

  std::ofstream out = open_or_throw(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width
      << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << ml << "\" y=\"22\" font-size=\"15\">consensus "
      << "error |x_i - x_0| over time</text>\n";

  // axes box + decade grid
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  const int decades = static_cast<int>(hi - lo);
  const int dec_step = std::max(1, decades / 10);
  for (int d = 0; d <= decades; d += dec_step) {
    const double y = mt + ph * d / (hi - lo);
    out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw
        << "\" y2=\"" << y
        << "\" stroke=\"#ddd\" stroke-width=\"0.6\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\">1e" << static_cast<int>(hi) - d
        << "</text>\n";
  }
  const int xticks = 5;
  for (int k = 0; k <= xticks; ++k) {
    const double t = t_max * k / xticks;
    const double x = sx(t);
    out << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x
        << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\">t</text>\n";

  if (!empty) {
    const std::size_t stride =
        std::max<std::size_t>(1, trace.times.size() / 1500);
    for (std::size_t f = 0; f < follower_ids.size(); ++f) {
      const char* color = kPalette[f % (sizeof(kPalette) / sizeof(*kPalette))];
      std::ostringstream pts;
      for (std::size_t k = 0; k < trace.times.size(); k += stride) {
        pts << sx(trace.times[k]) << "," << sy(trace.errors[k](f)) << " ";
      }
      if ((trace.times.size() - 1) % stride != 0) {
        const std::size_t k = trace.times.size() - 1;
        pts << sx(trace.times[k]) << "," << sy(trace.errors[k](f)) << " ";
      }
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.4\" points=\"" << pts.str() << "\"/>\n";
    }
  }

  for (std::size_t f = 0; f < follower_ids.size(); ++f) {
    const char* color = kPalette[f % (sizeof(kPalette) / sizeof(*kPalette))];
    const double y = mt + 14 + 20 * static_cast<double>(f);
    out << "<line x1=\"" << ml + pw + 14 << "\" y1=\"" << y << "\" x2=\""
        << ml + pw + 44 << "\" y2=\"" << y << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << ml + pw + 50 << "\" y=\"" << y + 4
        << "\">follower " << follower_ids[f] << "</text>\n";
  }
  if (trace.diverged) {
    out << "<text x=\"" << ml + pw + 14 << "\" y=\""
        << mt + 14 + 20 * static_cast<double>(follower_ids.size()) + 10
        << "\" fill=\"#d62728\">diverged</text>\n";
  }
  out << "</svg>\n";
}

nlohmann::json gains_to_json(const GainSet& gains) {
  nlohmann::json G = nlohmann::json::array();
  nlohmann::json K = nlohmann::json::array();
  const auto mat = [](const Matrix& M) {
    nlohmann::json flat = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) flat.push_back(M(r, c));
    }
    return flat;
  };
  for (const auto& g : gains.G) G.push_back(mat(g));
  for (const auto& k : gains.K) K.push_back(mat(k));
  return nlohmann::json{{"gains", {{"G", G}, {"K", K}}}};
}

GainSet gains_from_json(const nlohmann::json& fragment, int N, int m, int n) {
  const auto& g = fragment.at("gains");
  const auto read = [&](const nlohmann::json& list) {
    if (static_cast<int>(list.size()) != N) {
      throw ValidationError("gains fragment: expected " + std::to_string(N) +
                            " matrices");
    }
    std::vector<Matrix> out;
    for (const auto& flat : list) {
      if (static_cast<int>(flat.size()) != m * n) {
        throw ValidationError("gains fragment: matrix must have " +
                              std::to_string(m * n) + " entries");
      }
      Matrix M(m, n);
      for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) M(r, c) = flat[r * n + c].get<double>();
      }
      out.push_back(std::move(M));
    }
    return out;
  };
  GainSet gains;
  gains.G = read(g.at("G"));
  gains.K = read(g.at("K"));
  return gains;
}

}  // namespace consensus
