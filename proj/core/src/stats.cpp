#include "deepesn/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace deepesn {

namespace {

// q_{alpha,k,inf} / sqrt(2) for k = 2..20 models. Quantiles of the
// studentized range distribution with infinite degrees of freedom
// (scipy.stats.studentized_range.ppf(1 - alpha, k, df=1e6)) divided by
// sqrt(2) and rounded to three decimals; matches Demsar (2006), Table 5,
// to within 0.001 where that table overlaps (k <= 10).
constexpr std::array<double, 19> kNemenyiQ05 = {1.960, 2.344, 2.569, 2.728, 2.850, 2.948, 3.031,
                                                3.102, 3.164, 3.219, 3.268, 3.313, 3.354, 3.391,
                                                3.426, 3.458, 3.489, 3.517, 3.544};
constexpr std::array<double, 19> kNemenyiQ10 = {1.645, 2.052, 2.291, 2.460, 2.589, 2.693, 2.780,
                                                2.855, 2.920, 2.978, 3.030, 3.077, 3.120, 3.159,
                                                3.196, 3.230, 3.261, 3.291, 3.319};

// Sizes of tie groups in `values` (groups of one omitted).
std::vector<std::size_t> tie_groups(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> groups;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        if (j - i > 1) {
            groups.push_back(j - i);
        }
        i = j;
    }
    return groups;
}

double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

std::vector<std::size_t> rank_order(std::span<const double> ranks) {
    std::vector<std::size_t> order(ranks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranks[a] < ranks[b]; });
    return order;
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) {
            ++j;
        }
        // positions i+1 .. j share their mean
        const double shared = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = shared;
        }
        i = j;
    }
    return ranks;
}

FriedmanResult friedman_test(const Matrix& fold_scores, double alpha) {
    const auto blocks = static_cast<std::size_t>(fold_scores.rows());
    const auto treatments = static_cast<std::size_t>(fold_scores.cols());
    if (blocks < 2 || treatments < 2) {
        throw std::invalid_argument("friedman_test: need at least 2 folds and 2 models");
    }
    if (!fold_scores.allFinite()) {
        throw std::invalid_argument("friedman_test: non-finite scores");
    }
    std::vector<double> rank_sums(treatments, 0.0);
    double tie_term = 0.0;
    std::vector<double> row(treatments);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t j = 0; j < treatments; ++j) {
            row[j] = fold_scores(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
        }
        const auto ranks = fractional_ranks(row);
        for (std::size_t j = 0; j < treatments; ++j) {
            rank_sums[j] += ranks[j];
        }
        for (const auto t : tie_groups(row)) {
            const auto td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
    }
    const auto n = static_cast<double>(blocks);
    const auto k = static_cast<double>(treatments);
    double sum_sq = 0.0;
    for (const double r : rank_sums) {
        const double mean_rank = r / n;
        sum_sq += mean_rank * mean_rank;
    }
    const double uncorrected = 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    const double correction = 1.0 - tie_term / (n * k * (k * k - 1.0));

    FriedmanResult result;
    if (correction <= 1e-12) {
        // every block fully tied
        return result;
    }
    result.statistic = std::max(0.0, uncorrected / correction);
    if (result.statistic <= 1e-12 * n * k) {
        result.statistic = 0.0;
        return result;
    }
    const boost::math::chi_squared_distribution<double> chi2(k - 1.0);
    result.p_value = boost::math::cdf(boost::math::complement(chi2, result.statistic));
    result.reject = result.p_value < alpha;
    return result;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, double alpha,
                                    ZeroPolicy zeros) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("wilcoxon_signed_rank: samples differ in length");
    }
    if (a.empty()) {
        throw std::invalid_argument("wilcoxon_signed_rank: at least one pair is required");
    }
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        diffs[i] = a[i] - b[i];
        if (!std::isfinite(diffs[i])) {
            throw std::invalid_argument("wilcoxon_signed_rank: non-finite scores");
        }
    }
    if (zeros == ZeroPolicy::discard) {
        std::erase(diffs, 0.0);
    }
    std::vector<double> magnitudes(diffs.size());
    std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
    const auto ranks = fractional_ranks(magnitudes);

    // Doubled ranks are integral (midranks are multiples of 1/2).
    std::vector<long> doubled;
    long w_plus = 0;
    long w_minus = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] == 0.0) {
            continue;  // Pratt: zero ranks occupy positions but count for neither side
        }
        const auto r = static_cast<long>(std::lround(2.0 * ranks[i]));
        doubled.push_back(r);
        (diffs[i] > 0.0 ? w_plus : w_minus) += r;
    }

    WilcoxonResult result;
    result.effective_n = doubled.size();
    if (doubled.empty()) {
        return result;
    }
    const long observed = std::min(w_plus, w_minus);
    result.statistic = 0.5 * static_cast<double>(observed);
    const long total = w_plus + w_minus;

    if (doubled.size() <= kWilcoxonExactLimit) {
        // counts[s] = number of sign assignments whose doubled W+ equals s
        std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
        counts[0] = 1.0;
        long reach = 0;
        for (const long r : doubled) {
            for (long s = reach; s >= 0; --s) {
                if (counts[static_cast<std::size_t>(s)] != 0.0) {
                    counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
                }
            }
            reach += r;
        }
        double tail = 0.0;
        for (long s = 0; s <= observed; ++s) {
            tail += counts[static_cast<std::size_t>(s)];
        }
        const double assignments = std::ldexp(1.0, static_cast<int>(doubled.size()));
        result.p_value = std::min(1.0, 2.0 * tail / assignments);
        result.exact = true;
    } else {
        // Permutation mean and variance of W+ given the (possibly tied) ranks.
        double sum_sq = 0.0;
        for (const long r : doubled) {
            sum_sq += 0.25 * static_cast<double>(r) * static_cast<double>(r);
        }
        const double mean = 0.25 * static_cast<double>(total);
        const double sd = std::sqrt(sum_sq / 4.0);
        const double z = std::min(0.0, result.statistic - mean + 0.5) / sd;
        result.p_value = std::min(1.0, 2.0 * standard_normal_cdf(z));
        result.exact = false;
    }
    result.significant = result.p_value < alpha;
    return result;
}

RankTally rank_models_for_atr(const Matrix& fold_scores, std::span<const double> avg_scores, double alpha,
                              ZeroPolicy zeros) {
    const auto m = static_cast<std::size_t>(fold_scores.cols());
    if (avg_scores.size() != m) {
        throw std::invalid_argument("rank_models_for_atr: " + std::to_string(avg_scores.size()) +
                                    " average scores for " + std::to_string(m) + " models");
    }
    RankTally tally;
    tally.wins.assign(m, 0);
    tally.ties.assign(m, 0);
    tally.losses.assign(m, 0);
    tally.friedman = friedman_test(fold_scores, alpha);
    tally.friedman_rejected = tally.friedman.reject;
    if (!tally.friedman_rejected) {
        // No detectable difference: every pair counts as a tie.
        tally.ties.assign(m, static_cast<int>(m) - 1);
        tally.ranks.assign(m, 0.5 * static_cast<double>(m + 1));
        return tally;
    }
    const auto folds = static_cast<std::size_t>(fold_scores.rows());
    std::vector<double> x(folds);
    std::vector<double> y(folds);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            for (std::size_t p = 0; p < folds; ++p) {
                x[p] = fold_scores(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i));
                y[p] = fold_scores(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j));
            }
            if (!wilcoxon_signed_rank(x, y, alpha, zeros).significant) {
                ++tally.ties[i];
                ++tally.ties[j];
            } else if (avg_scores[i] > avg_scores[j]) {
                ++tally.wins[i];
                ++tally.losses[j];
            } else {
                ++tally.wins[j];
                ++tally.losses[i];
            }
        }
    }
    // Descending wins: rank by ascending negated wins.
    std::vector<double> negated(m);
    std::transform(tally.wins.begin(), tally.wins.end(), negated.begin(),
                   [](int w) { return -static_cast<double>(w); });
    tally.ranks = fractional_ranks(negated);
    return tally;
}

double nemenyi_q(std::size_t models, double alpha) {
    if (models < 2 || models > 20) {
        throw std::invalid_argument("nemenyi_q: model count " + std::to_string(models) +
                                    " outside the tabulated range 2..20");
    }
    if (std::abs(alpha - 0.05) < 1e-12) {
        return kNemenyiQ05[models - 2];
    }
    if (std::abs(alpha - 0.10) < 1e-12) {
        return kNemenyiQ10[models - 2];
    }
    throw std::invalid_argument("nemenyi_q: alpha must be 0.05 or 0.10");
}

double nemenyi_cd(std::size_t models, std::size_t datasets, double alpha) {
    if (datasets < 1) {
        throw std::invalid_argument("nemenyi_cd: at least one dataset is required");
    }
    const auto m = static_cast<double>(models);
    return nemenyi_q(models, alpha) * std::sqrt(m * (m + 1.0) / (6.0 * static_cast<double>(datasets)));
}

std::vector<std::vector<std::size_t>> find_cliques(std::span<const double> avg_ranks, double cd) {
    const auto order = rank_order(avg_ranks);
    std::vector<std::vector<std::size_t>> cliques;
    std::size_t covered_to = 0;  // one past the last sorted position already in a clique
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::size_t j = i;
        while (j + 1 < order.size() && avg_ranks[order[j + 1]] - avg_ranks[order[i]] < cd) {
            ++j;
        }
        if (j + 1 > covered_to) {
            cliques.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                 order.begin() + static_cast<std::ptrdiff_t>(j) + 1);
            covered_to = j + 1;
        }
    }
    return cliques;
}

RankReport average_ranks(const std::vector<RankTally>& tallies, const std::vector<std::string>& models, double alpha) {
    if (tallies.empty()) {
        throw std::invalid_argument("average_ranks: no usable datasets");
    }
    const std::size_t m = models.size();
    RankReport report;
    report.models = models;
    report.alpha = alpha;
    report.num_datasets = tallies.size();
    report.avg_ranks.assign(m, 0.0);
    report.total_wins.assign(m, 0);
    report.total_ties.assign(m, 0);
    report.total_losses.assign(m, 0);
    for (const auto& tally : tallies) {
        if (tally.ranks.size() != m) {
            throw std::invalid_argument("average_ranks: tally covers " + std::to_string(tally.ranks.size()) +
                                        " models, expected " + std::to_string(m));
        }
        for (std::size_t i = 0; i < m; ++i) {
            report.avg_ranks[i] += tally.ranks[i];
            report.total_wins[i] += tally.wins[i];
            report.total_ties[i] += tally.ties[i];
            report.total_losses[i] += tally.losses[i];
        }
    }
    for (auto& r : report.avg_ranks) {
        r /= static_cast<double>(tallies.size());
    }
    report.cd = nemenyi_cd(m, tallies.size(), alpha);
    report.cliques = find_cliques(report.avg_ranks, report.cd);
    return report;
}

RankReport rank_tensor(const ScoreTensor& tensor, double alpha, ZeroPolicy zeros) {
    const auto& models = tensor.models();
    if (models.size() < 2) {
        throw std::invalid_argument("rank_tensor: at least two models are required");
    }
    const auto folds = static_cast<Eigen::Index>(tensor.folds());
    std::vector<RankTally> tallies;
    std::vector<std::string> excluded;
    for (const auto& atr : tensor.atrs()) {
        Matrix scores(folds, static_cast<Eigen::Index>(models.size()));
        std::vector<double> averages(models.size());
        bool usable = true;
        for (std::size_t j = 0; j < models.size() && usable; ++j) {
            const auto* cell = tensor.find(atr, models[j]);
            if (cell == nullptr || cell->failed()) {
                usable = false;
                break;
            }
            for (Eigen::Index p = 0; p < folds; ++p) {
                scores(p, static_cast<Eigen::Index>(j)) = cell->scores[static_cast<std::size_t>(p)];
            }
            averages[j] = tensor.avg_score(atr, models[j]);
        }
        if (!usable) {
            excluded.push_back(atr);
            continue;
        }
        tallies.push_back(rank_models_for_atr(scores, averages, alpha, zeros));
    }
    if (tallies.empty()) {
        throw EvaluationFailure("rank_tensor: no dataset has complete scores for every model");
    }
    RankReport report = average_ranks(tallies, models, alpha);
    report.excluded_atrs = std::move(excluded);
    report.horizon = tensor.horizon();
    return report;
}

void write_rank_table(const RankReport& report, std::ostream& out, std::string_view header_note) {
    if (!header_note.empty()) {
        out << "# " << header_note << '\n';
    }
    out << "Horizon h=" << report.horizon << "  M=" << report.models.size() << "  N=" << report.num_datasets
        << "  alpha=" << format_fixed(report.alpha, 2) << "  CD=" << format_fixed(report.cd, 4) << '\n';
    if (!report.excluded_atrs.empty()) {
        out << "Excluded datasets (failed or incomplete pairs):";
        for (const auto& atr : report.excluded_atrs) {
            out << ' ' << atr;
        }
        out << '\n';
    }
    std::size_t name_width = 5;
    for (const auto& name : report.models) {
        name_width = std::max(name_width, name.size());
    }
    const auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, s.size()), ' '); };
    out << pad("model", name_width) << "  avg_rank    wins    ties  losses\n";
    for (const auto i : rank_order(report.avg_ranks)) {
        const auto num = [](const std::string& s) { return std::string(8 - std::min<std::size_t>(8, s.size()), ' ') + s; };
        out << pad(report.models[i], name_width) << "  " << num(format_fixed(report.avg_ranks[i], 3))
            << num(std::to_string(report.total_wins[i])) << num(std::to_string(report.total_ties[i]))
            << num(std::to_string(report.total_losses[i])) << '\n';
    }
    out << "Groups within CD:\n";
    for (const auto& clique : report.cliques) {
        out << " ";
        for (const auto idx : clique) {
            out << ' ' << report.models[idx];
        }
        out << '\n';
    }
}

void write_rank_csv(const RankReport& report, std::ostream& out, std::string_view header_note) {
    if (!header_note.empty()) {
        out << "# " << header_note << '\n';
    }
    out << "# horizon=" << report.horizon << ",N=" << report.num_datasets << ",alpha=" << format_double(report.alpha)
        << ",cd=" << format_double(report.cd) << '\n';
    out << "model,avg_rank,wins,ties,losses,clique\n";
    std::vector<std::string> membership(report.models.size());
    for (std::size_t c = 0; c < report.cliques.size(); ++c) {
        for (const auto idx : report.cliques[c]) {
            if (!membership[idx].empty()) {
                membership[idx] += ';';
            }
            membership[idx] += std::to_string(c + 1);
        }
    }
    for (const auto i : rank_order(report.avg_ranks)) {
        out << report.models[i] << ',' << format_double(report.avg_ranks[i]) << ',' << report.total_wins[i] << ','
            << report.total_ties[i] << ',' << report.total_losses[i] << ',' << membership[i] << '\n';
    }
}

}  // namespace deepesn
