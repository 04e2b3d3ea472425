#pragma once

// Non-parametric comparison of forecasters across datasets: Friedman gate,
// pairwise Wilcoxon signed-rank tests, WIN/TIE/LOSS tallies with fractional
// ranking, average ranks and the Nemenyi critical distance.

#include "deepesn/common.hpp"
#include "deepesn/evaluation.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace deepesn {

/// Average (fractional) ranks, 1 = smallest value. Ties share the mean of
/// the positions they occupy.
std::vector<double> fractional_ranks(std::span<const double> values);

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

/// Rows are blocks (folds), columns are treatments (models). Within-block
/// average ranks, tie-corrected chi-square with M - 1 degrees of freedom.
FriedmanResult friedman_test(const Matrix& fold_scores, double alpha);

enum class ZeroPolicy {
    discard,  // Wilcoxon: drop zero differences before ranking
    pratt,    // Pratt: rank with zeros, then drop their ranks
};

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;
    bool significant = false;
    std::size_t effective_n = 0;
    bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided paired signed-rank test. For n <= 25 non-zero differences the
/// p-value is the exact tail mass over all 2^n sign assignments (midranks
/// kept); above that a tie- and continuity-corrected normal approximation.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, double alpha,
                                    ZeroPolicy zeros = ZeroPolicy::discard);

struct RankTally {
    std::vector<int> wins;
    std::vector<int> ties;
    std::vector<int> losses;
    std::vector<double> ranks;
    bool friedman_rejected = false;
    FriedmanResult friedman;
};

/// Ranks M models on one dataset. When the Friedman test does not reject,
/// every model gets (M + 1) / 2 and every pair is tallied as a tie. Otherwise each pair is tested; a
/// non-significant pair is a tie for both, a significant one a win for the
/// higher average score. Models are ordered by descending wins and models
/// with equal wins share a fractional rank.
RankTally rank_models_for_atr(const Matrix& fold_scores, std::span<const double> avg_scores, double alpha,
                              ZeroPolicy zeros = ZeroPolicy::discard);

/// Studentized range critical value for infinite degrees of freedom divided
/// by sqrt(2). alpha must be 0.05 or 0.10; M in [2, 20].
double nemenyi_q(std::size_t models, double alpha);

/// CD = q * sqrt(M (M + 1) / (6 N)).
double nemenyi_cd(std::size_t models, std::size_t datasets, double alpha);

struct RankReport {
    std::vector<std::string> models;
    std::vector<double> avg_ranks;
    std::vector<int> total_wins;
    std::vector<int> total_ties;
    std::vector<int> total_losses;
    double cd = 0.0;
    double alpha = 0.05;
    std::size_t num_datasets = 0;
    std::vector<std::string> excluded_atrs;
    // Maximal groups (indices into `models`) whose average ranks span less
    // than cd. Models outside every larger group appear as singletons.
    std::vector<std::vector<std::size_t>> cliques;
    std::size_t horizon = 0;
};

/// Maximal runs of rank-sorted models with spread < cd.
std::vector<std::vector<std::size_t>> find_cliques(std::span<const double> avg_ranks, double cd);

RankReport average_ranks(const std::vector<RankTally>& tallies, const std::vector<std::string>& models, double alpha);

/// Full pipeline on a score tensor. Datasets with any failed or missing pair
/// are excluded (listed in the report).
RankReport rank_tensor(const ScoreTensor& tensor, double alpha, ZeroPolicy zeros = ZeroPolicy::discard);

/// Human-readable table.
void write_rank_table(const RankReport& report, std::ostream& out, std::string_view header_note = {});
/// `model,avg_rank,wins,ties,losses,clique` rows.
void write_rank_csv(const RankReport& report, std::ostream& out, std::string_view header_note = {});

/// Critical-difference diagram as standalone SVG.
std::string render_cd_svg(const RankReport& report, std::string_view header_note = {});
/// Fixed-width rendering of the same diagram.
std::string render_cd_text(const RankReport& report, std::size_t width = 72);
/// Writes `<stem>.svg` and `<stem>.txt`.
void write_cd_diagram(const RankReport& report, const std::string& path_stem, std::string_view header_note = {});

}  // namespace deepesn
