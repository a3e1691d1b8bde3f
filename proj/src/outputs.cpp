#include "rotator/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "rotator/scenario.hpp"

namespace rotator {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt_g(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    double xb = 0.0, yb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xb += x[i];
        yb += y[i];
    }
    xb /= n;
    yb /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - xb) * (y[i] - yb);
        den += (x[i] - xb) * (x[i] - xb);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& xlabel,
                          const std::string& ylabel, const std::vector<SvgSeries>& series,
                          bool loglog) {
    const double W = 720, H = 480, ml = 80, mr = 30, mt = 50, mb = 60;
    auto tx = [&](double u, double lo, double hi) {
        return ml + (u - lo) / (hi - lo) * (W - ml - mr);
    };
    auto ty = [&](double u, double lo, double hi) {
        return H - mb - (u - lo) / (hi - lo) * (H - mt - mb);
    };

    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    std::vector<SvgSeries> data = series;
    for (auto& s : data) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double xv = s.x[i], yv = s.y[i];
            if (loglog) {
                if (xv <= 0.0 || yv <= 0.0) continue;
                xv = std::log10(xv);
                yv = std::log10(yv);
            }
            xlo = std::min(xlo, xv);
            xhi = std::max(xhi, xv);
            ylo = std::min(ylo, yv);
            yhi = std::max(yhi, yv);
        }
    }
    if (xlo >= xhi) { xlo -= 1.0; xhi += 1.0; }
    if (ylo >= yhi) { ylo -= 1.0; yhi += 1.0; }
    const double xpad = 0.05 * (xhi - xlo), ypad = 0.05 * (yhi - ylo);
    xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
       << "</text>\n";
    // axes
    os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double fx = xlo + k * (xhi - xlo) / 5.0;
        const double fy = ylo + k * (yhi - ylo) / 5.0;
        const double px = tx(fx, xlo, xhi), py = ty(fy, ylo, yhi);
        os << "<line x1='" << px << "' y1='" << H - mb << "' x2='" << px << "' y2='" << H - mb + 5
           << "' stroke='black'/>\n";
        os << "<text x='" << px << "' y='" << H - mb + 20 << "' text-anchor='middle' font-size='11'>"
           << (loglog ? "1e" + fmt_g(fx) : fmt_g(fx)) << "</text>\n";
        os << "<line x1='" << ml - 5 << "' y1='" << py << "' x2='" << ml << "' y2='" << py
           << "' stroke='black'/>\n";
        os << "<text x='" << ml - 8 << "' y='" << py + 4 << "' text-anchor='end' font-size='11'>"
           << (loglog ? "1e" + fmt_g(fy) : fmt_g(fy)) << "</text>\n";
    }
    os << "<text x='" << (W + ml - mr) / 2 << "' y='" << H - 15
       << "' text-anchor='middle' font-size='13'>" << xlabel << "</text>\n";
    os << "<text x='20' y='" << (H + mt - mb) / 2
       << "' text-anchor='middle' font-size='13' transform='rotate(-90 20 "
       << (H + mt - mb) / 2 << ")'>" << ylabel << "</text>\n";

    int ci = 0;
    double legend_y = mt + 6;
    for (const auto& s : data) {
        const char* color = kPalette[ci % 6];
        std::ostringstream pts;
        std::vector<double> lx, lyv;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double xv = s.x[i], yv = s.y[i];
            if (loglog) {
                if (xv <= 0.0 || yv <= 0.0) continue;
                xv = std::log10(xv);
                yv = std::log10(yv);
            }
            lx.push_back(xv);
            lyv.push_back(yv);
            pts << tx(xv, xlo, xhi) << "," << ty(yv, ylo, yhi) << " ";
        }
        os << "<polyline points='" << pts.str() << "' fill='none' stroke='" << color
           << "' stroke-width='1.5'/>\n";
        std::string label = s.label;
        if (loglog) label += "  slope=" + fmt_g(lsq_slope(lx, lyv));
        os << "<text x='" << W - mr - 6 << "' y='" << legend_y
           << "' text-anchor='end' font-size='12' fill='" << color << "'>" << label
           << "</text>\n";
        legend_y += 16;
        ++ci;
    }
    os << "</svg>\n";
    return os.str();
}

std::string trajectory_csv(const std::vector<Trajectory>& trajs) {
    std::ostringstream os;
    os << std::setprecision(17);
    const bool combined = trajs.size() > 1;
    if (combined)
        os << "id,t,q1,q2,q3,theta1,theta2,theta3,rho,s1,s2,s3\n";
    else
        os << "t,q1,q2,q3,theta1,theta2,theta3,rho,s1,s2,s3\n";
    for (std::size_t id = 0; id < trajs.size(); ++id) {
        const Trajectory& tr = trajs[id];
        for (std::size_t k = 0; k < tr.size(); ++k) {
            if (combined) os << id << ",";
            os << tr.times[k] << "," << tr.q[k][0] << "," << tr.q[k][1] << "," << tr.q[k][2]
               << "," << tr.theta[k].alpha << "," << tr.theta[k].beta << "," << tr.theta[k].gamma
               << "," << tr.rho_at_particle[k] << "," << tr.spin_diag[k][0] << ","
               << tr.spin_diag[k][1] << "," << tr.spin_diag[k][2] << "\n";
        }
    }
    return os.str();
}

std::string observables_csv(const std::vector<double>& times,
                            const std::vector<Observables>& obs) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "t,norm,x1,x2,x3,s1,s2,s3\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        const Observables& o = obs[k];
        os << times[k] << "," << o.norm << "," << o.mean_position[0] << "," << o.mean_position[1]
           << "," << o.mean_position[2] << "," << o.mean_spin[0] << "," << o.mean_spin[1] << ","
           << o.mean_spin[2] << "\n";
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot open output file: " + path);
    out << content;
    if (!out) throw IOError("write failed: " + path);
}

void RunManifest::finalize() {
    std::ostringstream os;
    os << scenario_hash << ":" << seed << ":" << version;
    for (const auto& e : outputs) os << ":" << e.mode << "=" << e.path << "#" << e.fnv_hash;
    os << ":" << (checks_passed ? "pass" : "fail");
    std::ostringstream h;
    h << std::hex << fnv1a(os.str());
    content_hash = h.str();
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["scenario_hash"] = scenario_hash;
    j["seed"] = seed;
    j["tool_version"] = version;
    j["checks_passed"] = checks_passed;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& e : outputs)
        outs.push_back({{"mode", e.mode}, {"path", e.path}, {"hash", e.fnv_hash}});
    j["outputs"] = outs;
    j["content_hash"] = content_hash;
    j["wall_ms"] = wall_ms;  // informational only, not hashed
    return j.dump(2) + "\n";
}

}  // namespace rotator
