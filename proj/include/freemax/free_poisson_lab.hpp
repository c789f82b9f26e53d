#ifndef FREEMAX_FREE_POISSON_LAB_HPP
#define FREEMAX_FREE_POISSON_LAB_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cdf.hpp"
#include "free_poisson_laws.hpp"
#include "numerics.hpp"
#include "random.hpp"
#include "spectral_order.hpp"

namespace freemax {

struct Atom {
    std::string id;
    double mass = 0.0;
};

/// Finite measure space: atoms with masses, in a fixed order.
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            const auto& a = atoms_[i];
            require(!a.id.empty(), ErrorCode::invalid_argument, "Partition: empty atom id");
            require(std::isfinite(a.mass) && a.mass >= 0.0, ErrorCode::invalid_argument,
                    "Partition: atom '" + a.id + "' has invalid mass");
            for (std::size_t j = 0; j < i; ++j)
                require(atoms_[j].id != a.id, ErrorCode::invalid_argument, "Partition: duplicate atom id '" + a.id + "'");
            total_ += a.mass;
        }
    }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double total_mass() const { return total_; }

    std::size_t index_of(const std::string& id) const {
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            if (atoms_[i].id == id) return i;
        throw Error(ErrorCode::invalid_argument, "Partition: unknown atom id '" + id + "'");
    }

private:
    std::vector<Atom> atoms_;
    double total_ = 0.0;
};

/// A set of atom ids, kept in partition order once resolved.
struct SubsetId {
    std::vector<std::string> ids;

    /// "1,2,5"
    static SubsetId parse(const std::string& text) {
        SubsetId out;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            require(b != std::string::npos, ErrorCode::parse, "subset: empty id in '" + text + "'");
            out.ids.push_back(item.substr(b, e - b + 1));
        }
        require(!out.ids.empty(), ErrorCode::parse, "subset: no ids in '" + text + "'");
        return out;
    }

    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + ids[i];
        return s;
    }

    /// atom indices in partition order, without repeats
    std::vector<std::size_t> resolve(const Partition& p) const {
        std::vector<std::size_t> idx;
        for (const auto& id : ids) idx.push_back(p.index_of(id));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        return idx;
    }

    double mass(const Partition& p) const {
        double m = 0.0;
        for (auto i : resolve(p)) m += p.atoms()[i].mass;
        return m;
    }
};

/// "1;2;1,2"
inline std::vector<SubsetId> parse_subsets(const std::string& text) {
    std::vector<SubsetId> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(SubsetId::parse(item));
    require(!out.empty(), ErrorCode::parse, "subsets: nothing to parse");
    return out;
}

/// Atom j owns round(mu_j N) consecutive Gaussian columns; the matrix has
/// max(ceil(total N), sum of allotments) columns.
struct ColumnAllotment {
    long long n = 0;
    long long columns = 0;
    std::vector<long long> offset;
    std::vector<long long> count;
    std::vector<std::string> warnings;

    ColumnAllotment(const Partition& p, long long n_rows) : n(n_rows) {
        long long used = 0;
        for (const auto& a : p.atoms()) {
            const auto c = static_cast<long long>(std::llround(a.mass * static_cast<double>(n_rows)));
            if (a.mass > 0.0 && c == 0) warnings.push_back(starved(a, n_rows));
            offset.push_back(used);
            count.push_back(c);
            used += c;
        }
        columns = std::max(used, static_cast<long long>(std::ceil(p.total_mass() * static_cast<double>(n_rows))));
    }

    static std::string starved(const Atom& a, long long n_rows) {
        return "atom '" + a.id + "' (mass " + std::to_string(a.mass) + ") receives no column at N = " +
               std::to_string(n_rows);
    }

    long long allotted(const std::vector<std::size_t>& atoms) const {
        long long c = 0;
        for (auto i : atoms) c += count[i];
        return c;
    }
};

struct PoissonSample {
    RealHermitian matrix;
    long long allotted_columns = 0;
    /// allotted columns / N
    double mu_n = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

// Entries of each per-atom Gram block are rounded to multiples of 2^-40. Sums
// of such numbers below 2^12 in magnitude are exact in double arithmetic, so
// Π(α ∪ β) = Π(α) + Π(β) holds bit for bit in any summation order.
inline constexpr double kGramQuantum = 0x1p-40;

inline Eigen::MatrixXd poisson_gaussian(const ColumnAllotment& allot, RngSeed seed) {
    return gaussian_matrix<double>(allot.n, allot.columns, seed, 1.0 / static_cast<double>(allot.n));
}

inline Eigen::MatrixXd atom_gram(const Eigen::MatrixXd& gamma, const ColumnAllotment& allot, std::size_t atom) {
    const auto n = allot.n;
    if (allot.count[atom] == 0) return Eigen::MatrixXd::Zero(n, n);
    const auto block = gamma.middleCols(allot.offset[atom], allot.count[atom]);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(block);
    g = g.selfadjointView<Eigen::Lower>();
    return (g / kGramQuantum).array().round().matrix() * kGramQuantum;
}

inline Eigen::MatrixXd subset_gram(const Eigen::MatrixXd& gamma, const ColumnAllotment& allot,
                                   const std::vector<std::size_t>& atoms) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(allot.n, allot.n);
    for (auto j : atoms) sum += atom_gram(gamma, allot, j);
    return sum;
}

inline Eigen::MatrixXd sum_of(const std::map<std::size_t, Eigen::MatrixXd>& grams, long long n,
                              const std::vector<std::size_t>& atoms) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (auto j : atoms) sum += grams.at(j);
    return sum;
}

}  // namespace detail

/// Π_N(ω) = Γ D(ω) Γ*, Γ an N × M Gaussian matrix with variance 1/N. The seed
/// fixes Γ, so different subsets with one seed share the same columns.
inline PoissonSample sample_free_poisson_matrix(const Partition& partition, const SubsetId& subset, long long n,
                                                RngSeed seed, Resolution resolution = Resolution::full) {
    require(n >= 8, ErrorCode::invalid_argument, "sample_free_poisson_matrix: N must be >= 8");
    const auto atoms = subset.resolve(partition);
    const ColumnAllotment allot(partition, n);
    const Eigen::MatrixXd gamma = detail::poisson_gaussian(allot, seed);
    PoissonSample out{RealHermitian(detail::subset_gram(gamma, allot, atoms), resolution), allot.allotted(atoms),
                      0.0, {}};
    out.mu_n = static_cast<double>(out.allotted_columns) / static_cast<double>(n);
    for (auto j : atoms)
        if (partition.atoms()[j].mass > 0.0 && allot.count[j] == 0)
            out.warnings.push_back(ColumnAllotment::starved(partition.atoms()[j], n));
    return out;
}

inline constexpr double kRangeTolerance = 1e-8;

namespace detail {

inline void require_psd(const RealHermitian& a, double tol, const char* op) {
    const double top = std::max(0.0, a.max_eigenvalue());
    require(a.min_eigenvalue() >= -tol * std::max(top, 1e-300), ErrorCode::domain,
            std::string(op) + ": matrix has a negative eigenvalue beyond tolerance");
}

}  // namespace detail

/// Projection onto eigenvectors with eigenvalue > tol · λ_max.
inline Projection<double> range_projection(const RealHermitian& a, double tol = kRangeTolerance) {
    detail::require_psd(a, tol, "range_projection");
    const double top = a.max_eigenvalue();
    if (top <= 0.0) return Projection<double>::zero(a.dimension());
    const auto& vals = a.eigenvalues();
    Eigen::Index first = 0;
    while (first < vals.size() && !(vals(first) > tol * top)) ++first;
    return detail_projection<double>(Eigen::MatrixXd(a.eigenvectors().rightCols(vals.size() - first)));
}

/// rank of range_projection, from eigenvalues alone
inline long long range_rank(const RealHermitian& a, double tol = kRangeTolerance) {
    detail::require_psd(a, tol, "range_rank");
    const double top = a.max_eigenvalue();
    if (top <= 0.0) return 0;
    long long r = 0;
    for (double v : a.eigenvalues()) r += v > tol * top;
    return r;
}

/// Per-atom realizations of the triangular process: the N-point quantile
/// diagonal of triangular_law_cdf(mu_j), conjugated by an independent Haar
/// rotation per atom.
inline std::map<std::string, RealHermitian> realize_triangular_process(const Partition& partition, long long n,
                                                                       RngSeed seed) {
    require(n >= 8, ErrorCode::invalid_argument, "realize_triangular_process: N must be >= 8");
    std::map<std::string, RealHermitian> out;
    for (std::size_t j = 0; j < partition.size(); ++j) {
        const auto& atom = partition.atoms()[j];
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        if (atom.mass > 0.0) {
            const Cdf law = triangular_law_cdf(atom.mass);
            for (long long i = 0; i < n; ++i)
                diag(i) = quantile(law, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
        }
        out.emplace(atom.id, RealHermitian::from_spectrum(diag, haar_unitary<double>(n, seed.child(j))));
    }
    return out;
}

/// Z(ω): spectral max over the subset's atoms, in partition order.
inline RealHermitian triangular_process_value(const std::map<std::string, RealHermitian>& process,
                                              const Partition& partition, const SubsetId& subset) {
    const auto atoms = subset.resolve(partition);
    require(!atoms.empty(), ErrorCode::invalid_argument, "triangular_process_value: empty subset");
    RealHermitian z = process.at(partition.atoms()[atoms.front()].id);
    for (std::size_t k = 1; k < atoms.size(); ++k) z = spectral_max(z, process.at(partition.atoms()[atoms[k]].id));
    return z;
}

struct SubsetRecord {
    SubsetId subset;
    long long n = 0;
    /// mean over trials of rank(Y) / N
    double tau_y = 0.0;
    /// min(mu(ω), 1)
    double expected = 0.0;
    /// Y(ω) equals the join of its atoms' Y, checked on the first trial
    bool join_additivity_ok = true;
    /// pooled nonzero spectrum vs the conditional free Poisson law at mu_N
    double ks_distance = 0.0;
    double mu = 0.0;
    double mu_n = 0.0;
    /// largest |1 - λ| over the nonzero spectrum, worst trial: ||Y - Π||
    double norm_gap = 0.0;
    std::vector<double> tau_trials;
};

struct ProcessReport {
    std::vector<SubsetRecord> records;
    std::vector<std::string> warnings;
};

namespace detail {

using RangeCache = std::map<std::size_t, Projection<double>>;

inline const Projection<double>& atom_range(const std::map<std::size_t, Eigen::MatrixXd>& grams, std::size_t j,
                                            RangeCache& cache) {
    auto it = cache.find(j);
    if (it == cache.end()) it = cache.emplace(j, range_projection(RealHermitian(grams.at(j)))).first;
    return it->second;
}

inline bool join_additive(const std::map<std::size_t, Eigen::MatrixXd>& grams, long long n,
                          const std::vector<std::size_t>& atoms, RangeCache& cache) {
    if (atoms.size() < 2) return true;
    const auto whole = range_projection(RealHermitian(sum_of(grams, n, atoms)));
    auto joined = atom_range(grams, atoms.front(), cache);
    for (std::size_t k = 1; k < atoms.size(); ++k) joined = proj_join(joined, atom_range(grams, atoms[k], cache));
    return whole.rank() == joined.rank() && max_principal_angle(whole, joined) < 1e-8;
}

inline bool join_additive(const std::map<std::size_t, Eigen::MatrixXd>& grams, long long n,
                          const std::vector<std::size_t>& atoms) {
    RangeCache cache;
    return join_additive(grams, n, atoms, cache);
}

}  // namespace detail

/// Trials run in parallel on split seeds; every per-trial quantity is stored
/// by index and reduced in trial order.
inline ProcessReport extremal_process_report(const Partition& partition, const std::vector<SubsetId>& subsets,
                                             long long n, int trials, RngSeed seed,
                                             unsigned threads = std::thread::hardware_concurrency()) {
    require(n >= 8, ErrorCode::invalid_argument, "extremal_process_report: N must be >= 8");
    require(trials >= 1, ErrorCode::invalid_argument, "extremal_process_report: trials must be >= 1");
    require(!subsets.empty(), ErrorCode::invalid_argument, "extremal_process_report: no subsets");
    const ColumnAllotment allot(partition, n);
    std::vector<std::vector<std::size_t>> resolved;
    for (const auto& s : subsets) resolved.push_back(s.resolve(partition));

    const auto count = static_cast<std::size_t>(trials);
    const auto ns = subsets.size();
    std::vector<std::vector<double>> tau(ns, std::vector<double>(count));
    std::vector<std::vector<double>> gap(ns, std::vector<double>(count));
    std::vector<std::vector<std::vector<double>>> spectra(ns, std::vector<std::vector<double>>(count));
    std::vector<char> additive(ns, 1);
    parallel_for(count, threads, [&](std::size_t t) {
        const Eigen::MatrixXd gamma = detail::poisson_gaussian(allot, seed.child(t));
        std::map<std::size_t, Eigen::MatrixXd> grams;
        for (const auto& atoms : resolved)
            for (auto j : atoms)
                if (!grams.count(j)) grams.emplace(j, detail::atom_gram(gamma, allot, j));
        detail::RangeCache ranges;
        for (std::size_t s = 0; s < ns; ++s) {
            const RealHermitian pi(detail::sum_of(grams, n, resolved[s]), Resolution::values_only);
            const long long r = range_rank(pi);
            tau[s][t] = static_cast<double>(r) / static_cast<double>(n);
            const double cut = kRangeTolerance * pi.max_eigenvalue();
            double g = 0.0;
            for (double v : pi.eigenvalues())
                if (v > cut) {
                    spectra[s][t].push_back(v);
                    g = std::max(g, std::abs(1.0 - v));
                }
            gap[s][t] = g;
            if (t == 0) additive[s] = detail::join_additive(grams, n, resolved[s], ranges);
        }
    });

    ProcessReport report;
    report.warnings = allot.warnings;
    for (std::size_t s = 0; s < ns; ++s) {
        SubsetRecord rec;
        rec.subset = subsets[s];
        rec.n = n;
        rec.mu = subsets[s].mass(partition);
        rec.mu_n = static_cast<double>(allot.allotted(resolved[s])) / static_cast<double>(n);
        rec.expected = std::min(rec.mu, 1.0);
        rec.tau_trials = tau[s];
        rec.tau_y = std::accumulate(tau[s].begin(), tau[s].end(), 0.0) / static_cast<double>(count);
        rec.norm_gap = *std::max_element(gap[s].begin(), gap[s].end());
        rec.join_additivity_ok = additive[s] != 0;
        std::vector<double> pooled;
        for (const auto& sp : spectra[s]) pooled.insert(pooled.end(), sp.begin(), sp.end());
        rec.ks_distance = pooled.empty() || rec.mu_n <= 0.0 ? 0.0 : ks_distance(pooled, mp_continuous_cdf(rec.mu_n));
        report.records.push_back(std::move(rec));
    }
    return report;
}

}  // namespace freemax

#endif  // FREEMAX_FREE_POISSON_LAB_HPP
