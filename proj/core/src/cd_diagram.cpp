#include "deepesn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace deepesn {

namespace {

constexpr double kAxisLeft = 180.0;
constexpr double kAxisRight = 620.0;
constexpr double kAxisY = 90.0;
constexpr double kCliqueGap = 9.0;
constexpr double kLabelGap = 22.0;

std::string escape(std::string_view text) {
    std::string out;
    for (const char c : text) {
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

std::string px(double v) {
    return format_fixed(v, 1);
}

std::vector<std::size_t> sorted_by_rank(const RankReport& report) {
    std::vector<std::size_t> order(report.models.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return report.avg_ranks[a] < report.avg_ranks[b]; });
    return order;
}

std::vector<const std::vector<std::size_t>*> connectors(const RankReport& report) {
    std::vector<const std::vector<std::size_t>*> out;
    for (const auto& clique : report.cliques) {
        if (clique.size() > 1) {
            out.push_back(&clique);
        }
    }
    return out;
}

}  // namespace

std::string render_cd_svg(const RankReport& report, std::string_view header_note) {
    const std::size_t m = report.models.size();
    const double span = m > 1 ? static_cast<double>(m - 1) : 1.0;
    const auto x_of = [&](double rank) { return kAxisLeft + (rank - 1.0) / span * (kAxisRight - kAxisLeft); };
    const auto order = sorted_by_rank(report);
    const auto bars = connectors(report);
    const std::size_t left_count = (m + 1) / 2;
    const double label_top = kAxisY + 20.0 + kCliqueGap * static_cast<double>(bars.size());
    const double height = label_top + kLabelGap * static_cast<double>(left_count) + 20.0;
    const double width = 800.0;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!header_note.empty()) {
        svg << "<!-- " << escape(header_note) << " -->\n";
    }
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
        << "\" viewBox=\"0 0 " << px(width) << ' ' << px(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Critical distance scale bar.
    const double cd_end = kAxisLeft + report.cd / span * (kAxisRight - kAxisLeft);
    svg << "<g id=\"cd\" stroke=\"black\" stroke-width=\"1\">\n"
        << "<line x1=\"" << px(kAxisLeft) << "\" y1=\"25.0\" x2=\"" << px(cd_end) << "\" y2=\"25.0\"/>\n"
        << "<line x1=\"" << px(kAxisLeft) << "\" y1=\"20.0\" x2=\"" << px(kAxisLeft) << "\" y2=\"30.0\"/>\n"
        << "<line x1=\"" << px(cd_end) << "\" y1=\"20.0\" x2=\"" << px(cd_end) << "\" y2=\"30.0\"/>\n"
        << "</g>\n"
        << "<text x=\"" << px(0.5 * (kAxisLeft + cd_end)) << "\" y=\"16.0\" text-anchor=\"middle\">CD = "
        << format_fixed(report.cd, 2) << "</text>\n";

    // Rank axis with integer ticks.
    svg << "<g id=\"axis\" stroke=\"black\" stroke-width=\"1\">\n"
        << "<line x1=\"" << px(kAxisLeft) << "\" y1=\"" << px(kAxisY) << "\" x2=\"" << px(kAxisRight) << "\" y2=\""
        << px(kAxisY) << "\"/>\n";
    for (std::size_t r = 1; r <= std::max<std::size_t>(m, 2); ++r) {
        const double x = x_of(static_cast<double>(r));
        svg << "<line x1=\"" << px(x) << "\" y1=\"" << px(kAxisY - 6.0) << "\" x2=\"" << px(x) << "\" y2=\""
            << px(kAxisY) << "\"/>\n";
    }
    svg << "</g>\n<g id=\"tick-labels\" text-anchor=\"middle\">\n";
    for (std::size_t r = 1; r <= std::max<std::size_t>(m, 2); ++r) {
        svg << "<text x=\"" << px(x_of(static_cast<double>(r))) << "\" y=\"" << px(kAxisY - 10.0) << "\">" << r
            << "</text>\n";
    }
    svg << "</g>\n";

    // One elbow line and label per model; better half on the left.
    svg << "<g id=\"models\">\n";
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t idx = order[pos];
        const double rank = report.avg_ranks[idx];
        const double x = x_of(rank);
        const bool left = pos < left_count;
        const std::size_t row = left ? pos : order.size() - 1 - pos;
        const double y = label_top + kLabelGap * static_cast<double>(row);
        const double end_x = left ? kAxisLeft - 20.0 : kAxisRight + 20.0;
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"" << px(x) << ',' << px(kAxisY)
            << ' ' << px(x) << ',' << px(y) << ' ' << px(end_x) << ',' << px(y) << "\"/>\n";
        svg << "<circle cx=\"" << px(x) << "\" cy=\"" << px(kAxisY) << "\" r=\"2.5\" fill=\"black\"/>\n";
        const std::string label = escape(report.models[idx]) + " (" + format_fixed(rank, 2) + ")";
        svg << "<text x=\"" << px(left ? end_x - 5.0 : end_x + 5.0) << "\" y=\"" << px(y + 4.0)
            << "\" text-anchor=\"" << (left ? "end" : "start") << "\">" << label << "</text>\n";
    }
    svg << "</g>\n";

    // Bold connectors for groups of statistically indistinguishable models.
    svg << "<g id=\"cliques\" stroke=\"black\" stroke-width=\"4\" stroke-linecap=\"round\">\n";
    for (std::size_t c = 0; c < bars.size(); ++c) {
        double lo = report.avg_ranks[bars[c]->front()];
        double hi = lo;
        for (const auto idx : *bars[c]) {
            lo = std::min(lo, report.avg_ranks[idx]);
            hi = std::max(hi, report.avg_ranks[idx]);
        }
        const double y = kAxisY + 14.0 + kCliqueGap * static_cast<double>(c);
        svg << "<line x1=\"" << px(x_of(lo) - 4.0) << "\" y1=\"" << px(y) << "\" x2=\"" << px(x_of(hi) + 4.0)
            << "\" y2=\"" << px(y) << "\"/>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

std::string render_cd_text(const RankReport& report, std::size_t width) {
    const std::size_t m = report.models.size();
    std::size_t name_width = 6;
    for (const auto& name : report.models) {
        name_width = std::max(name_width, name.size());
    }
    name_width += 2;
    const std::size_t plot = std::max<std::size_t>(width > name_width + 10 ? width - name_width - 10 : 10, 10);
    const double span = m > 1 ? static_cast<double>(m - 1) : 1.0;
    const auto col = [&](double rank) {
        const double pos = (rank - 1.0) / span * static_cast<double>(plot - 1);
        return static_cast<std::size_t>(std::clamp(std::lround(pos), 0L, static_cast<long>(plot - 1)));
    };
    const auto label = [&](const std::string& s) { return s + std::string(name_width - std::min(name_width, s.size()), ' '); };

    std::ostringstream out;
    out << "Critical difference diagram (h=" << report.horizon << "): CD = " << format_fixed(report.cd, 3)
        << ", alpha = " << format_fixed(report.alpha, 2) << ", N = " << report.num_datasets << ", M = " << m << '\n';

    std::string cd_line(plot, ' ');
    const std::size_t cd_cols = std::min(plot - 1, col(1.0 + report.cd));
    for (std::size_t i = 0; i <= cd_cols; ++i) {
        cd_line[i] = '-';
    }
    cd_line[0] = '|';
    cd_line[cd_cols] = '|';
    out << label("CD") << cd_line << '\n';

    std::string scale(plot, ' ');
    const std::string first = "1";
    const std::string last = std::to_string(m);
    scale.replace(0, first.size(), first);
    scale.replace(plot - last.size(), last.size(), last);
    out << label("rank") << scale << '\n';
    std::string axis(plot, '-');
    for (std::size_t r = 1; r <= m; ++r) {
        axis[col(static_cast<double>(r))] = '+';
    }
    out << label("") << axis << '\n';

    for (const auto idx : sorted_by_rank(report)) {
        std::string row(plot, ' ');
        row[col(report.avg_ranks[idx])] = 'o';
        out << label(report.models[idx]) << row << "  " << format_fixed(report.avg_ranks[idx], 2) << '\n';
    }
    for (const auto* clique : connectors(report)) {
        double lo = report.avg_ranks[clique->front()];
        double hi = lo;
        std::string names;
        for (const auto idx : *clique) {
            lo = std::min(lo, report.avg_ranks[idx]);
            hi = std::max(hi, report.avg_ranks[idx]);
            names += (names.empty() ? "" : ", ") + report.models[idx];
        }
        std::string row(plot, ' ');
        for (std::size_t i = col(lo); i <= col(hi); ++i) {
            row[i] = '=';
        }
        out << label("group") << row << "  " << names << '\n';
    }
    return out.str();
}

void write_cd_diagram(const RankReport& report, const std::string& path_stem, std::string_view header_note) {
    std::ofstream svg(path_stem + ".svg", std::ios::binary);
    std::ofstream txt(path_stem + ".txt", std::ios::binary);
    if (!svg || !txt) {
        throw DataError("cannot write critical difference diagram to " + path_stem + ".{svg,txt}");
    }
    svg << render_cd_svg(report, header_note);
    if (!header_note.empty()) {
        txt << "# " << header_note << '\n';
    }
    txt << render_cd_text(report);
    if (!svg || !txt) {
        throw DataError("failed writing critical difference diagram " + path_stem);
    }
}

}  // namespace deepesn
