#ifndef SEQCURVE_EMPIRICAL_HPP
#define SEQCURVE_EMPIRICAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcurve {

// Marker values in arrival order; prefix of length k always means the first k arrivals.
struct MarkerSample {
    std::vector<double> cases;
    std::vector<double> controls;
};

// Observed accrual fractions selecting sample prefixes.
struct SequentialView {
    double r_D = 1.0;
    double r_Dbar = 1.0;
};

struct Prevalence {
    double rho;
    explicit Prevalence(double r) : rho(r) {
        if (!(rho > 0.0 && rho < 1.0))
            throw std::domain_error("Prevalence: rho must lie in (0,1)");
    }
};

// Interior index bounds (a,b) and minimum accrual fractions (c,d) within which the
// asymptotic formulas are valid.
struct ValidityWindow {
    double a = 0.05, b = 0.95, c = 0.1, d = 0.05;
};

// Prefix length [r*n]; the 1e-9 guard keeps exact products like (2/3)*3 from
// flooring one short.  Zero-length prefixes are rejected, not clamped.
inline std::size_t prefix_length(std::size_t n, double r) {
    if (!(r > 0.0 && r <= 1.0))
        throw std::domain_error("prefix fraction r must lie in (0,1]");
    const std::size_t k = static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
    if (k < 1) throw std::domain_error("prefix is empty: r*n < 1");
    return std::min(k, n);
}

// Sorted copy of the first [r*n] arrivals; the workhorse for all step-function queries.
class SortedPrefix {
public:
    SortedPrefix(const std::vector<double>& values, double r) {
        if (values.empty()) throw std::domain_error("empty sample");
        const std::size_t k = prefix_length(values.size(), r);
        sorted_.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
        std::stable_sort(sorted_.begin(), sorted_.end());
    }

    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& data() const { return sorted_; }

    // F-hat(x) = #{X_i <= x}/k: right-continuous, values on the exact grid j/k.
    double ecdf(double x) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    // F-hat^{-1}(t): the ceil(t*k)-th order statistic for t in ((j-1)/k, j/k],
    // and the minimum order statistic at t = 0.
    double quantile(double t) const {
        if (!(t >= 0.0 && t <= 1.0))
            throw std::domain_error("quantile level t must lie in [0,1]");
        const double k = static_cast<double>(sorted_.size());
        auto j = static_cast<std::ptrdiff_t>(std::ceil(t * k - 1e-9));
        j = std::max<std::ptrdiff_t>(1, std::min<std::ptrdiff_t>(j, static_cast<std::ptrdiff_t>(sorted_.size())));
        return sorted_[static_cast<std::size_t>(j - 1)];
    }

    // S-hat(x) = #{X_i > x}/k, counted directly so values land on the exact grid j/k
    double survival(double x) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
    }
    double survival_quantile(double t) const { return quantile(1.0 - t); }

private:
    std::vector<double> sorted_;
};

inline double seq_ecdf(const std::vector<double>& values, double r, double x) {
    return SortedPrefix(values, r).ecdf(x);
}

inline double seq_quantile(const std::vector<double>& values, double r, double t) {
    return SortedPrefix(values, r).quantile(t);
}

inline double seq_survival(const std::vector<double>& values, double r, double x) {
    return SortedPrefix(values, r).survival(x);
}

inline double seq_survival_quantile(const std::vector<double>& values, double r, double t) {
    return seq_quantile(values, r, 1.0 - t);
}

inline double mixture_ecdf(const MarkerSample& sample, const SequentialView& view,
                           const Prevalence& rho, double x) {
    const SortedPrefix cases(sample.cases, view.r_D);
    const SortedPrefix controls(sample.controls, view.r_Dbar);
    return rho.rho * cases.ecdf(x) + (1.0 - rho.rho) * controls.ecdf(x);
}

// Generalized inverse of the mixture ECDF: smallest pooled observation x with
// F-hat(x) >= u, found by scanning the sorted union of both prefixes.
inline double mixture_quantile(const MarkerSample& sample, const SequentialView& view,
                               const Prevalence& rho, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("mixture_quantile: u must lie in (0,1)");
    const SortedPrefix cases(sample.cases, view.r_D);
    const SortedPrefix controls(sample.controls, view.r_Dbar);
    const auto& a = cases.data();
    const auto& b = controls.data();
    const double wa = rho.rho / static_cast<double>(a.size());
    const double wb = (1.0 - rho.rho) / static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double mass = 0.0;
    double x = 0.0;
    while (i < a.size() || j < b.size()) {
        if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
            x = a[i++];
        } else {
            x = b[j++];
        }
        // absorb every atom tied at x before testing the step value
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        mass = wa * static_cast<double>(i) + wb * static_cast<double>(j);
        if (mass >= u - 1e-12) return x;
    }
    return x; // mass is 1 here; unreachable for u < 1 barring FP pathologies
}

// CSV ingestion: header row "value,label" with label in {case, control};
// arrival order is file order.
inline MarkerSample load_marker_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file: " + path);
    MarkerSample sample;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected two columns 'value,label'");
        std::string value_str = line.substr(0, comma);
        std::string label = line.substr(comma + 1);
        auto strip = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
        };
        strip(value_str);
        strip(label);
        if (lineno == 1) {
            if (value_str != "value" || label != "label")
                throw std::runtime_error(path + ":1: header row 'value,label' required");
            continue;
        }
        double v;
        try {
            std::size_t pos = 0;
            v = std::stod(value_str, &pos);
            if (pos != value_str.size()) throw std::invalid_argument(value_str);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": bad numeric value '" + value_str + "'");
        }
        if (label == "case") {
            sample.cases.push_back(v);
        } else if (label == "control") {
            sample.controls.push_back(v);
        } else {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": label must be 'case' or 'control', got '" + label + "'");
        }
    }
    if (lineno == 0) throw std::runtime_error(path + ": empty file (header row required)");
    return sample;
}

} // namespace seqcurve

#endif
