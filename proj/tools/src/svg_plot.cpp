#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace relground::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else if (c == '"') o += "&quot;";
        else o += c;
    }
    return o;
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"};

class Svg {
public:
    Svg(double w, double h) : w_(w), h_(h) {}

    void text(double x, double y, const std::string& s, int size = 12, const char* anchor = "middle") {
        body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size << "\" text-anchor=\""
              << anchor << "\" font-family=\"sans-serif\">" << escape(s) << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333", double width = 1,
              bool dashed = false) {
        body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
              << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\""
              << (dashed ? " stroke-dasharray=\"5,4\"" : "") << "/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none") {
        body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
              << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) body_ << num(x) << ',' << num(y) << ' ';
        body_ << "\"/>\n";
    }
    void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill) {
        body_ << "<polygon fill=\"" << fill << "\" fill-opacity=\"0.7\" stroke=\"#333\" stroke-width=\"0.8\" points=\"";
        for (const auto& [x, y] : pts) body_ << num(x) << ',' << num(y) << ' ';
        body_ << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
              << "\"/>\n";
    }
    std::string str() const {
        std::ostringstream o;
        o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\"" << num(h_)
          << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_) << "\">\n"
          << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << body_.str() << "</svg>\n";
        return o.str();
    }

private:
    double w_, h_;
    std::ostringstream body_;
};

/// Linear map of [lo, hi] onto pixel range [a, b].
struct Scale {
    double lo, hi, a, b;
    double operator()(double v) const { return hi > lo ? a + (v - lo) / (hi - lo) * (b - a) : (a + b) / 2; }
};

std::vector<double> ticks(double lo, double hi, int n = 5) {
    std::vector<double> t;
    for (int i = 0; i <= n; ++i) t.push_back(lo + (hi - lo) * i / n);
    return t;
}

void y_axis(Svg& svg, const Scale& sy, double x, const std::string& name) {
    svg.line(x, sy.a, x, sy.b);
    for (double v : ticks(sy.lo, sy.hi)) {
        svg.line(x - 4, sy(v), x, sy(v));
        svg.text(x - 6, sy(v) + 4, label(v), 10, "end");
    }
    svg.text(x - 40, (sy.a + sy.b) / 2, name, 11);
}

}  // namespace

std::vector<double> kernel_density(const std::vector<double>& samples, const std::vector<double>& grid) {
    std::vector<double> d(grid.size(), 0.0);
    if (samples.empty()) return d;
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0;
    for (double s : samples) var += (s - mean) * (s - mean);
    const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    double h = 1.06 * sd * std::pow(n, -0.2);
    if (!(h > 1e-9)) h = 1e-3;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0;
        for (double s : samples) {
            const double u = (grid[i] - s) / h;
            acc += std::exp(-0.5 * u * u);
        }
        d[i] = acc / (n * h * std::sqrt(2 * kPi));
    }
    return d;
}

std::string ed_curve_svg(const std::string& title, const std::vector<evalkit::CurvePoint>& curve,
                         std::optional<double> reference_length) {
    if (curve.empty()) throw NoData("edit-distance curve '" + title + "' is empty");
    const double W = 420, H = 420, left = 60, right = W - 20;
    Svg svg(W, H);
    svg.text(W / 2, 20, title, 14);
    const double n_max = curve.back().n_demos;
    const Scale sx{1, std::max(2.0, n_max), left, right};

    double len_max = 1;
    for (const auto& p : curve) len_max = std::max(len_max, p.mean_length);
    if (reference_length) len_max = std::max(len_max, *reference_length);
    len_max = std::ceil(len_max * 1.1);

    const Scale ed{0, 1, 190, 40};
    const Scale ln{0, len_max, 370, 220};
    y_axis(svg, ed, left, "edit dist.");
    y_axis(svg, ln, left, "plan length");
    for (const auto* s : {&ed, &ln}) svg.line(left, s->a, right, s->a);

    std::vector<std::pair<double, double>> pe, pl;
    for (const auto& p : curve) {
        pe.emplace_back(sx(p.n_demos), ed(p.mean_ed));
        pl.emplace_back(sx(p.n_demos), ln(p.mean_length));
    }
    svg.polyline(pe, kPalette[0]);
    svg.polyline(pl, kPalette[1]);
    for (const auto& [x, y] : pe) svg.circle(x, y, 3, kPalette[0]);
    for (const auto& [x, y] : pl) svg.circle(x, y, 3, kPalette[1]);
    if (reference_length) svg.line(left, ln(*reference_length), right, ln(*reference_length), kPalette[3], 1.5, true);
    for (const auto& p : curve) {
        svg.line(sx(p.n_demos), ln.a, sx(p.n_demos), ln.a + 4);
        svg.text(sx(p.n_demos), ln.a + 16, std::to_string(p.n_demos), 10);
    }
    svg.text(W / 2, H - 6, "number of demonstrations", 11);
    return svg.str();
}

std::string violin_svg(const std::string& title, const evalkit::LatentSamples& samples) {
    std::size_t total = 0;
    for (std::size_t g = 0; g < samples.groups.size(); ++g) {
        for (const auto& v : samples.by_label[g]) total += v.size();
        total += samples.unknown[g].size();
    }
    if (samples.groups.empty() || total == 0) throw NoData("latent export '" + title + "' has no samples");

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto extend = [&](const std::vector<double>& v) {
        for (double x : v) lo = std::min(lo, x), hi = std::max(hi, x);
    };
    for (std::size_t g = 0; g < samples.groups.size(); ++g) {
        for (const auto& v : samples.by_label[g]) extend(v);
        extend(samples.unknown[g]);
    }
    const double pad = std::max(0.5, 0.05 * (hi - lo));
    lo -= pad;
    hi += pad;

    const double slot = 46, group_gap = 24, left = 70;
    double width = left + 20;
    for (std::size_t g = 0; g < samples.groups.size(); ++g)
        width += slot * static_cast<double>(samples.label_names[g].size() + 1) + group_gap;
    const double H = 380;
    Svg svg(width, H);
    svg.text(width / 2, 20, title, 14);
    const Scale sy{lo, hi, H - 70, 40};
    y_axis(svg, sy, left - 10, "c value");

    std::vector<double> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back(lo + (hi - lo) * i / 80.0);
    double x = left;
    for (std::size_t g = 0; g < samples.groups.size(); ++g) {
        std::vector<std::pair<std::string, const std::vector<double>*>> lists;
        for (std::size_t l = 0; l < samples.label_names[g].size(); ++l)
            lists.emplace_back(samples.label_names[g][l], &samples.by_label[g][l]);
        lists.emplace_back("unknown", &samples.unknown[g]);
        const double x0 = x;
        for (std::size_t k = 0; k < lists.size(); ++k) {
            const double cx = x + slot / 2;
            const auto& v = *lists[k].second;
            if (!v.empty()) {
                const auto d = kernel_density(v, grid);
                const double dmax = *std::max_element(d.begin(), d.end());
                std::vector<std::pair<double, double>> outline;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    outline.emplace_back(cx - (dmax > 0 ? d[i] / dmax : 0) * slot * 0.45, sy(grid[i]));
                for (std::size_t i = grid.size(); i-- > 0;)
                    outline.emplace_back(cx + (dmax > 0 ? d[i] / dmax : 0) * slot * 0.45, sy(grid[i]));
                const bool unknown = k + 1 == lists.size();
                svg.polygon(outline, unknown ? "#bab0ac" : kPalette[k % 8]);
                const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                svg.line(cx - slot * 0.2, sy(mean), cx + slot * 0.2, sy(mean), "#000", 1.5);
            }
            svg.text(cx, H - 52, lists[k].first, 9);
            x += slot;
        }
        svg.text((x0 + x) / 2, H - 30, samples.groups[g], 12);
        x += group_gap;
    }
    return svg.str();
}

std::string pose_mae_svg(const std::string& title, const std::array<double, 6>& mae,
                         const std::array<double, 6>& baseline) {
    const char* axes[] = {"X", "Y", "Z", "Roll", "Pitch", "Yaw"};
    const double W = 520, H = 340, left = 70, right = W - 20;
    Svg svg(W, H);
    svg.text(W / 2, 20, title, 14);
    double top = 1e-6;
    for (int i = 0; i < 6; ++i) top = std::max({top, mae[i], baseline[i]});
    const Scale sy{0, top * 1.1, H - 60, 40};
    y_axis(svg, sy, left, "MAE");
    svg.line(left, sy.a, right, sy.a);
    const double slot = (right - left) / 6;
    for (int i = 0; i < 6; ++i) {
        const double x = left + slot * i;
        svg.rect(x + slot * 0.15, sy(mae[i]), slot * 0.33, sy.a - sy(mae[i]), kPalette[0]);
        svg.rect(x + slot * 0.52, sy(baseline[i]), slot * 0.33, sy.a - sy(baseline[i]), "#bab0ac");
        svg.text(x + slot / 2, sy.a + 16, axes[i], 11);
    }
    svg.rect(right - 150, 34, 10, 10, kPalette[0]);
    svg.text(right - 136, 43, "regressor", 10, "start");
    svg.rect(right - 80, 34, 10, 10, "#bab0ac");
    svg.text(right - 66, 43, "mean pose", 10, "start");
    svg.text(W / 2, H - 20, "m for X/Y/Z, rad for Roll/Pitch/Yaw", 10);
    return svg.str();
}

std::string table_svg(const std::string& title, const std::vector<TableCell>& cells) {
    if (cells.empty()) throw NoData("table '" + title + "' is empty");
    std::vector<std::string> rows, cols;
    std::map<std::pair<std::string, std::string>, double> value;
    for (const auto& c : cells) {
        if (std::find(rows.begin(), rows.end(), c.row) == rows.end()) rows.push_back(c.row);
        if (std::find(cols.begin(), cols.end(), c.column) == cols.end()) cols.push_back(c.column);
        value[{c.row, c.column}] = c.value;
    }
    const double cw = 96, rh = 26, head = 130;
    const double W = head + cw * static_cast<double>(cols.size()) + 20;
    const double H = 50 + rh * static_cast<double>(rows.size() + 1) + 10;
    Svg svg(W, H);
    svg.text(W / 2, 20, title, 14);
    const double y0 = 40;
    for (std::size_t j = 0; j < cols.size(); ++j) svg.text(head + cw * (j + 0.5), y0 + 17, cols[j], 11);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double y = y0 + rh * static_cast<double>(i + 1);
        if (i % 2 == 0) svg.rect(10, y, W - 20, rh, "#f2f2f2");
        svg.text(16, y + 17, rows[i], 11, "start");
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto it = value.find({rows[i], cols[j]});
            if (it != value.end()) svg.text(head + cw * (j + 0.5), y + 17, num(it->second), 11);
        }
    }
    svg.line(10, y0 + rh, W - 10, y0 + rh);
    return svg.str();
}

}  // namespace relground::cli
