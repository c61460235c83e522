#include "locind/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "locind/format.hpp"

namespace locind {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    return format_double(std::round(v * 100.0) / 100.0);
}

}  // namespace

std::string step_plot_svg(const std::vector<PlotSeries>& series, double horizon, const std::string& title,
                          const std::string& y_label, const ContrastBand* band) {
    double lo = 0.0, hi = 0.0;
    auto widen = [&](double v) {
        if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    };
    for (const auto& s : series)
        for (double v : s.curve.values) widen(v);
    if (band)
        for (std::size_t k = 0; k < band->times.size(); ++k) widen(band->lower[k]), widen(band->upper[k]);
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= lo < 0.0 ? pad : 0.0;
    hi += pad;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto x = [&](double t) { return kLeft + pw * std::clamp(t / horizon, 0.0, 1.0); };
    auto y = [&](double v) { return kTop + ph * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";

    if (band && !band->times.empty()) {
        std::string upper, lower;
        const auto& t = band->times;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double next = k + 1 < t.size() ? t[k + 1] : horizon;
            upper += num(x(t[k])) + "," + num(y(band->upper[k])) + " " + num(x(next)) + "," + num(y(band->upper[k])) + " ";
        }
        for (std::size_t k = t.size(); k-- > 0;) {
            const double next = k + 1 < t.size() ? t[k + 1] : horizon;
            lower += num(x(next)) + "," + num(y(band->lower[k])) + " " + num(x(t[k])) + "," + num(y(band->lower[k])) + " ";
        }
        svg << "<polygon points=\"" << upper << lower << "\" fill=\"#999999\" fill-opacity=\"0.3\" stroke=\"none\"/>\n";
    }

    // axes with five ticks each
    svg << "<g stroke=\"black\" fill=\"none\">\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
        << "\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n";
    if (lo < 0.0 && hi > 0.0)
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(y(0.0)) << "\" x2=\"" << kLeft + pw << "\" y2=\""
            << num(y(0.0)) << "\" stroke-dasharray=\"4 3\" stroke=\"#666666\"/>\n";
    svg << "</g>\n";
    for (int k = 0; k <= 4; ++k) {
        const double t = horizon * k / 4.0, v = lo + (hi - lo) * k / 4.0;
        svg << "<text x=\"" << num(x(t)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
            << format_double(std::round(t * 1000.0) / 1000.0) << "</text>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">"
            << format_double(std::round(v * 1000.0) / 1000.0) << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">time</text>\n";
    svg << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& c = series[s].curve;
        if (c.times.empty()) continue;
        std::string pts;
        for (std::size_t k = 0; k < c.times.size(); ++k) {
            const double next = k + 1 < c.times.size() ? c.times[k + 1] : horizon;
            pts += num(x(c.times[k])) + "," + num(y(c.values[k])) + " " + num(x(next)) + "," + num(y(c.values[k])) + " ";
        }
        svg << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << series[s].color
            << "\" stroke-width=\"1.5\"/>\n";
        const double ly = kTop + 16.0 * static_cast<double>(s) + 8;
        svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30 << "\" y2=\"" << ly
            << "\" stroke=\"" << series[s].color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + pw + 34 << "\" y=\"" << ly + 4 << "\">" << escape(series[s].label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace locind
