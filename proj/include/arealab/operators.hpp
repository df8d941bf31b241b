#pragma once

#include "arealab/core.hpp"
#include "arealab/lattice.hpp"

#include <json.hpp>

#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace arealab {

/// Hermitian operator on an ordered list of lattice sites. The matrix uses the
/// little-endian convention: support[0] is the fastest-varying tensor factor.
struct LocalTerm {
    std::vector<int> support;
    Mat              matrix;
    std::string      label;
};

inline bool identical(const LocalTerm &a, const LocalTerm &b) {
    return a.support == b.support && a.matrix.rows() == b.matrix.rows() && a.matrix.cols() == b.matrix.cols() && a.matrix == b.matrix;
}

namespace pauli {
inline Mat X() { return (Mat(2, 2) << 0, 1, 1, 0).finished(); }
inline Mat Y() { return (Mat(2, 2) << 0, cplx(0, -1), cplx(0, 1), 0).finished(); }
inline Mat Z() { return (Mat(2, 2) << 1, 0, 0, -1).finished(); }
} // namespace pauli

/// Kronecker product in little-endian order: result index = i_first + dim(first) * i_second.
inline Mat kron_le(const Mat &first, const Mat &second) {
    Mat out(first.rows() * second.rows(), first.cols() * second.cols());
    for(Eigen::Index r2 = 0; r2 < second.rows(); ++r2)
        for(Eigen::Index c2 = 0; c2 < second.cols(); ++c2) out.block(r2 * first.rows(), c2 * first.cols(), first.rows(), first.cols()) = second(r2, c2) * first;
    return out;
}

inline Vec kron_le(const Vec &first, const Vec &second) {
    Vec out(first.size() * second.size());
    for(Eigen::Index j = 0; j < second.size(); ++j) out.segment(j * first.size(), first.size()) = second[j] * first;
    return out;
}

/// Maps each full-space basis index onto (index inside `keep`, index of the rest),
/// both little-endian in their own position order.
struct IndexSplit {
    std::vector<std::int64_t> keep_index;
    std::vector<std::int64_t> rest_index;
    std::int64_t              keep_dim = 1;
    std::int64_t              rest_dim = 1;
};

inline IndexSplit split_indices(const std::vector<int> &dims, const std::vector<int> &keep_positions) {
    const int         n = static_cast<int>(dims.size());
    std::vector<char> kept(n, 0);
    for(int p : keep_positions) {
        require(p >= 0 && p < n, "split_indices: position out of range");
        require(!kept[p], "split_indices: repeated position");
        kept[p] = 1;
    }
    std::vector<std::int64_t> kstride(n, 0), rstride(n, 0);
    IndexSplit                s;
    for(int p : keep_positions) {
        kstride[p] = s.keep_dim;
        s.keep_dim *= dims[p];
    }
    for(int p = 0; p < n; ++p)
        if(!kept[p]) {
            rstride[p] = s.rest_dim;
            s.rest_dim *= dims[p];
        }
    const std::int64_t total = s.keep_dim * s.rest_dim;
    s.keep_index.resize(total);
    s.rest_index.resize(total);
    std::vector<int> digit(n, 0);
    std::int64_t     ki = 0, ri = 0;
    for(std::int64_t i = 0; i < total; ++i) {
        s.keep_index[i] = ki;
        s.rest_index[i] = ri;
        for(int p = 0; p < n; ++p) {
            auto &st = kept[p] ? kstride[p] : rstride[p];
            auto &acc = kept[p] ? ki : ri;
            if(++digit[p] < dims[p]) {
                acc += st;
                break;
            }
            acc -= st * (dims[p] - 1);
            digit[p] = 0;
        }
    }
    return s;
}

/// Embeds `m`, acting on `sub` (given as positions within `positions_dims`), into the
/// full space of `positions_dims` by identity padding.
inline Mat embed_dense(const Mat &m, const std::vector<int> &sub, const std::vector<int> &dims) {
    auto               split = split_indices(dims, sub);
    const std::int64_t total = split.keep_dim * split.rest_dim;
    require(m.rows() == split.keep_dim, "embed_dense: operator dimension does not match its support");
    Mat out = Mat::Zero(total, total);
    // index of (k, r) in the full space
    std::vector<std::int64_t> full(total);
    for(std::int64_t i = 0; i < total; ++i) full[split.keep_index[i] + split.keep_dim * split.rest_index[i]] = i;
    for(std::int64_t r = 0; r < split.rest_dim; ++r)
        for(std::int64_t kc = 0; kc < split.keep_dim; ++kc)
            for(std::int64_t kr = 0; kr < split.keep_dim; ++kr) {
                cplx v = m(kr, kc);
                if(v != 0.0) out(full[kr + split.keep_dim * r], full[kc + split.keep_dim * r]) += v;
            }
    return out;
}

/// Applies `op` on the positions `sub` of a state vector over `dims`.
inline Vec apply_on(const Mat &op, const std::vector<int> &sub, const std::vector<int> &dims, const Vec &state) {
    auto split = split_indices(dims, sub);
    require(op.cols() == split.keep_dim && op.rows() == split.keep_dim, "apply_on: operator dimension mismatch");
    require(state.size() == split.keep_dim * split.rest_dim, "apply_on: state dimension mismatch");
    Mat psi(split.keep_dim, split.rest_dim);
    for(std::int64_t i = 0; i < state.size(); ++i) psi(split.keep_index[i], split.rest_index[i]) = state[i];
    Mat phi = op * psi;
    Vec out(state.size());
    for(std::int64_t i = 0; i < state.size(); ++i) out[i] = phi(split.keep_index[i], split.rest_index[i]);
    return out;
}

/// Hamiltonian on an ordered set of lattice sites. Position p of `sites` is tensor
/// factor p (little-endian), so appending a site appends the slowest factor.
struct Hamiltonian {
    std::vector<int>       sites;
    std::vector<int>       local_dims;
    std::vector<LocalTerm> terms;
    int                    k0 = 1;

    [[nodiscard]] int n() const { return static_cast<int>(sites.size()); }

    [[nodiscard]] std::int64_t dim() const {
        std::int64_t d = 1;
        for(int x : local_dims) d *= x;
        return d;
    }

    [[nodiscard]] int position_of(int site) const {
        auto it = std::find(sites.begin(), sites.end(), site);
        if(it == sites.end()) throw ModelError("site " + std::to_string(site) + " is not part of the Hamiltonian");
        return static_cast<int>(it - sites.begin());
    }

    [[nodiscard]] bool has_site(int site) const { return std::find(sites.begin(), sites.end(), site) != sites.end(); }

    [[nodiscard]] std::vector<int> positions_of(const std::vector<int> &support) const {
        std::vector<int> p;
        p.reserve(support.size());
        for(int s : support) p.push_back(position_of(s));
        return p;
    }

    [[nodiscard]] int local_dim(int site) const { return local_dims.at(position_of(site)); }
};

inline void validate_term(const LocalTerm &t, const Hamiltonian &h) {
    std::int64_t d = 1;
    for(int s : t.support) d *= h.local_dim(s);
    if(t.matrix.rows() != d || t.matrix.cols() != d) throw ModelError("term '" + t.label + "' has the wrong matrix dimension for its support");
    if(hermiticity_defect(t.matrix) > 1e-12) throw ModelError("term '" + t.label + "' is not Hermitian");
}

struct AssemblyLimits {
    std::int64_t sparse_cap = std::int64_t{1} << 24;
    std::int64_t dense_cap  = std::int64_t{1} << 14;
};

/// Sparse assembly of a term list over a given position layout. Built directly in CSR
/// form: one counting pass and one fill pass, rows merged in column order.
inline SpMat assemble_terms(const std::vector<LocalTerm> &terms, const Hamiltonian &layout, const AssemblyLimits &lim = {}) {
    const std::int64_t dim = layout.dim();
    if(dim > lim.sparse_cap) throw ResourceError("assemble: Hilbert dimension " + std::to_string(dim) + " exceeds the sparse cap " + std::to_string(lim.sparse_cap));
    const int n = layout.n();
    std::vector<std::int64_t> stride(n, 1);
    for(int p = 1; p < n; ++p) stride[p] = stride[p - 1] * layout.local_dims[p - 1];

    struct Prepared {
        std::vector<int>                                   pos;
        std::vector<int>                                   dims;
        std::vector<std::int64_t>                          offset; // full-space offset of each local index
        std::vector<std::vector<std::pair<int, cplx>>> rows;
    };
    std::vector<Prepared> prep;
    for(const auto &t : terms) {
        validate_term(t, layout);
        Prepared p;
        p.pos = layout.positions_of(t.support);
        for(int q : p.pos) p.dims.push_back(layout.local_dims[q]);
        const int ld = static_cast<int>(t.matrix.rows());
        p.offset.assign(ld, 0);
        for(int l = 0; l < ld; ++l) {
            int rem = l;
            for(std::size_t a = 0; a < p.pos.size(); ++a) {
                p.offset[l] += (rem % p.dims[a]) * stride[p.pos[a]];
                rem /= p.dims[a];
            }
        }
        p.rows.resize(ld);
        for(int r = 0; r < ld; ++r)
            for(int c = 0; c < ld; ++c)
                if(t.matrix(r, c) != 0.0) p.rows[r].emplace_back(c, t.matrix(r, c));
        prep.push_back(std::move(p));
    }

    std::vector<std::pair<std::int64_t, cplx>> buf;
    auto gather = [&](std::int64_t i) {
        buf.clear();
        for(const auto &p : prep) {
            std::int64_t local = 0, base = i, mult = 1;
            for(std::size_t a = 0; a < p.pos.size(); ++a) {
                std::int64_t digit = (i / stride[p.pos[a]]) % p.dims[a];
                local += digit * mult;
                mult *= p.dims[a];
                base -= digit * stride[p.pos[a]];
            }
            for(const auto &[c, v] : p.rows[local]) buf.emplace_back(base + p.offset[c], v);
        }
        std::sort(buf.begin(), buf.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        std::size_t w = 0;
        for(std::size_t r = 0; r < buf.size(); ++r) {
            if(w > 0 && buf[w - 1].first == buf[r].first) buf[w - 1].second += buf[r].second;
            else buf[w++] = buf[r];
        }
        buf.resize(w);
        buf.erase(std::remove_if(buf.begin(), buf.end(), [](const auto &e) { return e.second == 0.0; }), buf.end());
    };

    SpMat m(dim, dim);
    std::vector<std::int64_t> outer(dim + 1, 0);
    for(std::int64_t i = 0; i < dim; ++i) {
        gather(i);
        outer[i + 1] = outer[i] + static_cast<std::int64_t>(buf.size());
    }
    m.resizeNonZeros(outer[dim]);
    std::copy(outer.begin(), outer.end(), m.outerIndexPtr());
    for(std::int64_t i = 0; i < dim; ++i) {
        gather(i);
        std::int64_t at = outer[i];
        for(const auto &[c, v] : buf) {
            m.innerIndexPtr()[at] = c;
            m.valuePtr()[at]      = v;
            ++at;
        }
    }
    return m;
}

inline SpMat assemble(const Hamiltonian &h, const AssemblyLimits &lim = {}) { return assemble_terms(h.terms, h, lim); }

inline Mat to_dense(const SpMat &m, const AssemblyLimits &lim = {}) {
    if(m.rows() > lim.dense_cap) throw ResourceError("dense conversion: dimension " + std::to_string(m.rows()) + " exceeds the dense cap " + std::to_string(lim.dense_cap));
    return Mat(m);
}

inline Mat assemble_dense(const Hamiltonian &h, const AssemblyLimits &lim = {}) {
    if(h.dim() > lim.dense_cap) throw ResourceError("dense assembly: dimension " + std::to_string(h.dim()) + " exceeds the dense cap " + std::to_string(lim.dense_cap));
    return Mat(assemble(h, lim));
}

/// Largest singular value, computed on the term's own support only.
inline double operator_norm(const LocalTerm &t) {
    if(t.matrix.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(t.matrix);
    return svd.singularValues()(0);
}

/// Sums terms into one term on the union of their supports, ordered by `layout` position.
inline LocalTerm merge_terms(const std::vector<LocalTerm> &terms, const Hamiltonian &layout, const std::string &label, const std::vector<double> &weights = {}) {
    std::vector<int> support;
    for(const auto &t : terms)
        for(int s : t.support)
            if(std::find(support.begin(), support.end(), s) == support.end()) support.push_back(s);
    std::sort(support.begin(), support.end(), [&](int a, int b) { return layout.position_of(a) < layout.position_of(b); });
    std::vector<int> dims;
    for(int s : support) dims.push_back(layout.local_dim(s));
    std::int64_t d = 1;
    for(int x : dims) d *= x;
    LocalTerm out{support, Mat::Zero(d, d), label};
    for(std::size_t i = 0; i < terms.size(); ++i) {
        std::vector<int> sub;
        for(int s : terms[i].support) sub.push_back(static_cast<int>(std::find(support.begin(), support.end(), s) - support.begin()));
        const double w = weights.empty() ? 1.0 : weights[i];
        out.matrix += w * embed_dense(terms[i].matrix, sub, dims);
    }
    return out;
}

/// Re-expresses a term on a larger support (identity padding), support order preserved.
inline LocalTerm extend_term(const LocalTerm &t, const std::vector<int> &support, const Hamiltonian &layout) {
    std::vector<int> dims, sub;
    for(int s : support) dims.push_back(layout.local_dim(s));
    for(int s : t.support) {
        auto it = std::find(support.begin(), support.end(), s);
        require(it != support.end(), "extend_term: target support does not contain the term");
        sub.push_back(static_cast<int>(it - support.begin()));
    }
    return {support, embed_dense(t.matrix, sub, dims), t.label};
}

struct BoundaryTerm {
    LocalTerm term;
    int       tightest_k = 1; ///< smallest k with support inside B_n^k
    double    norm       = 0; ///< operator norm of K_n
};

/// K_n = H^(n) - H^(n-1) as a single merged term. Shared terms must be bit-identical.
inline BoundaryTerm boundary_term(const Hamiltonian &h_n, const Hamiltonian &h_prev, const Lattice &lat, double J) {
    if(h_n.n() != h_prev.n() + 1) throw ModelError("boundary_term: h_n must have exactly one more site than h_prev");
    int added = -1;
    for(int s : h_n.sites)
        if(!h_prev.has_site(s)) added = s;
    for(int s : h_prev.sites)
        if(!h_n.has_site(s)) throw ModelError("boundary_term: h_prev contains a site missing from h_n");

    std::vector<char>      used(h_n.terms.size(), 0);
    std::vector<LocalTerm> parts;
    std::vector<double>    weights;
    for(const auto &t : h_prev.terms) {
        bool matched = false;
        for(std::size_t i = 0; i < h_n.terms.size() && !matched; ++i)
            if(!used[i] && identical(t, h_n.terms[i])) used[i] = matched = true;
        if(!matched) {
            parts.push_back(t);
            weights.push_back(-1.0);
        }
    }
    for(std::size_t i = 0; i < h_n.terms.size(); ++i)
        if(!used[i]) {
            parts.push_back(h_n.terms[i]);
            weights.push_back(1.0);
        }
    if(parts.empty()) parts.push_back({{added}, Mat::Zero(h_n.local_dim(added), h_n.local_dim(added)), "zero"});
    if(weights.size() < parts.size()) weights.push_back(1.0);

    BoundaryTerm out;
    out.term = merge_terms(parts, h_n, "K_" + std::to_string(h_n.n()), weights);
    auto dist = lat.bfs(added);
    for(int s : out.term.support) out.tightest_k = std::max(out.tightest_k, dist[s] + 1);
    if(out.tightest_k > 2 * h_n.k0)
        throw ModelError("boundary_term: support of K_" + std::to_string(h_n.n()) + " escapes B_n^{2k0} (needs k=" + std::to_string(out.tightest_k) + ")");
    out.norm = operator_norm(out.term);
    if(out.norm > J * (1 + 1e-12)) throw ConstantsViolation("boundary_term: ||K_n|| = " + std::to_string(out.norm) + " exceeds J = " + std::to_string(J));
    return out;
}

// ---------------------------------------------------------------------------------
// Model zoo

struct ModelSpec {
    std::string              kind = "tfim"; // tfim | contrived | custom
    std::map<std::string, double> parameters;
    Lattice                  lattice;
    int                      k0        = 2;
    int                      local_dim = 2;
    std::vector<LocalTerm>   custom_terms;
    std::vector<std::string> warnings;

    [[nodiscard]] double param(const std::string &key) const {
        auto it = parameters.find(key);
        if(it == parameters.end()) throw ModelError("model parameter '" + key + "' is missing");
        return it->second;
    }
};

inline ModelSpec tfim_model(const Lattice &lat, double J, double g) {
    if(J <= 0 || g <= 0) throw ParameterError("tfim_model: J and g must be positive");
    ModelSpec m;
    m.kind       = "tfim";
    m.parameters = {{"J", J}, {"g", g}};
    m.lattice    = lat;
    m.k0         = 2;
    m.local_dim  = 2;
    if(g / J <= 1.0) m.warnings.push_back("tfim_model: g/J <= 1 is outside the gapped paramagnetic window");
    return m;
}

namespace detail {
inline Mat projector4(std::initializer_list<int> levels) {
    Mat p = Mat::Zero(4, 4);
    for(int l : levels) p(l, l) = 1.0;
    return p;
}

inline bool is_chain(const Lattice &lat) {
    if(lat.dimension() != 1) return false;
    for(int s = 0; s < lat.size(); ++s)
        if(lat.neighbors(s).size() > 2) return false;
    return static_cast<int>(lat.edges().size()) == lat.size() - 1;
}
} // namespace detail

/// Four-level chain whose ground state jumps between the {1,2} and {3,4} sectors when
/// the system reaches M sites. Basis |1>..|4> is stored as indices 0..3 and the
/// sector toggle acts on lattice site 0.
inline ModelSpec contrived_model(const Lattice &lat, int M, double delta) {
    if(!detail::is_chain(lat)) throw ParameterError("contrived_model: requires a 1D chain");
    if(M < 2 || M > lat.size()) throw ParameterError("contrived_model: M must satisfy 2 <= M <= n");
    if(delta <= 0) throw ParameterError("contrived_model: Delta must be positive");
    ModelSpec m;
    m.kind       = "contrived";
    m.parameters = {{"M", static_cast<double>(M)}, {"Delta", delta}};
    m.lattice    = lat;
    m.k0         = 2;
    m.local_dim  = 4;
    return m;
}

inline ModelSpec custom_model(const Lattice &lat, std::vector<LocalTerm> terms, int local_dim, int k0) {
    ModelSpec m;
    m.kind         = "custom";
    m.lattice      = lat;
    m.k0           = k0;
    m.local_dim    = local_dim;
    m.custom_terms = std::move(terms);
    for(const auto &t : m.custom_terms) {
        if(hermiticity_defect(t.matrix) > 1e-12) throw ModelError("custom term '" + t.label + "' is not Hermitian");
        bool inside = false;
        for(int s = 0; s < lat.size() && !inside; ++s) {
            auto b = ball(lat, s, k0);
            inside = std::all_of(t.support.begin(), t.support.end(), [&](int x) { return b.contains(x); });
        }
        if(!inside) throw ModelError("custom term '" + t.label + "' is not supported inside any ball B_s^k0");
    }
    return m;
}

/// Hamiltonian of the model restricted to `ordered_sites` (position order = given order).
inline Hamiltonian model_hamiltonian(const ModelSpec &model, const std::vector<int> &ordered_sites) {
    Hamiltonian h;
    h.sites      = ordered_sites;
    h.local_dims.assign(ordered_sites.size(), model.local_dim);
    h.k0         = model.k0;
    std::vector<char> in(model.lattice.size(), 0);
    for(int s : ordered_sites) {
        require(s >= 0 && s < model.lattice.size(), "model_hamiltonian: site out of range");
        in[s] = 1;
    }
    const int n = h.n();

    if(model.kind == "tfim") {
        const double J = model.param("J"), g = model.param("g");
        const Mat    zz = kron_le(pauli::Z(), pauli::Z());
        for(auto [a, b] : model.lattice.edges())
            if(in[a] && in[b]) h.terms.push_back({{a, b}, -J * zz, "ZZ"});
        for(int s : ordered_sites) h.terms.push_back({{s}, -g * pauli::X(), "X"});
    } else if(model.kind == "contrived") {
        const double delta = model.param("Delta");
        const int    M     = static_cast<int>(model.param("M"));
        const Mat    p12 = detail::projector4({0, 1}), p34 = detail::projector4({2, 3});
        if(in[0]) {
            if(n >= M) h.terms.push_back({{0}, delta * p12, "sector_a"});
            else h.terms.push_back({{0}, delta * p34, "sector_b"});
        }
        for(int s : ordered_sites) h.terms.push_back({{s}, delta * detail::projector4({1, 3}), "onsite"});
        const Mat wall = delta * (kron_le(p12, p34) + kron_le(p34, p12));
        for(auto [a, b] : model.lattice.edges())
            if(in[a] && in[b]) h.terms.push_back({{std::min(a, b), std::max(a, b)}, wall, "wall"});
    } else if(model.kind == "custom") {
        for(const auto &t : model.custom_terms)
            if(std::all_of(t.support.begin(), t.support.end(), [&](int s) { return in[s]; })) h.terms.push_back(t);
    } else {
        throw ModelError("unknown model kind '" + model.kind + "'");
    }
    return h;
}

/// Stable serialization of a term list in position coordinates; equal strings mean
/// equal operators on equal layouts, independent of the lattice labels.
inline std::string canonical_terms(const Hamiltonian &h) {
    std::ostringstream os;
    os.precision(17);
    os << "dims";
    for(int d : h.local_dims) os << ' ' << d;
    os << '\n';
    for(const auto &t : h.terms) {
        os << "term";
        for(int p : h.positions_of(t.support)) os << ' ' << p;
        os << " |";
        for(Eigen::Index i = 0; i < t.matrix.size(); ++i) os << ' ' << t.matrix.data()[i].real() << ' ' << t.matrix.data()[i].imag();
        os << '\n';
    }
    return os.str();
}

inline nlohmann::json term_to_json(const LocalTerm &t) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for(Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
        std::vector<double> rr, ii;
        for(Eigen::Index c = 0; c < t.matrix.cols(); ++c) {
            rr.push_back(t.matrix(r, c).real());
            ii.push_back(t.matrix(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return {{"support", t.support}, {"label", t.label}, {"re", re}, {"im", im}};
}

inline LocalTerm term_from_json(const nlohmann::json &j) {
    LocalTerm t;
    t.support      = j.at("support").get<std::vector<int>>();
    t.label        = j.value("label", std::string("custom"));
    const auto &re = j.at("re");
    const auto  d  = static_cast<Eigen::Index>(re.size());
    t.matrix       = Mat::Zero(d, d);
    for(Eigen::Index r = 0; r < d; ++r)
        for(Eigen::Index c = 0; c < d; ++c) {
            double imv  = j.contains("im") ? j["im"].at(r).at(c).get<double>() : 0.0;
            t.matrix(r, c) = cplx(re.at(r).at(c).get<double>(), imv);
        }
    return t;
}

} // namespace arealab
