#pragma once

#include "arealab/operators.hpp"
#include "arealab/spectra.hpp"

#include <openssl/evp.h>

#include <array>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <unistd.h>
#include <fcntl.h>

namespace arealab {

// ---------------------------------------------------------------------------------
// Hashing

inline std::string to_hex(const unsigned char *p, std::size_t n) {
    static const char *digits = "0123456789abcdef";
    std::string        out(2 * n, '0');
    for(std::size_t i = 0; i < n; ++i) {
        out[2 * i]     = digits[p[i] >> 4];
        out[2 * i + 1] = digits[p[i] & 15];
    }
    return out;
}

inline std::array<unsigned char, 32> sha256_raw(const void *data, std::size_t size) {
    std::array<unsigned char, 32> md{};
    unsigned int                  len = 0;
    if(EVP_Digest(data, size, md.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) throw ResourceError("sha256: digest failed");
    return md;
}

inline std::string sha256_hex(const std::string &s) {
    auto md = sha256_raw(s.data(), s.size());
    return to_hex(md.data(), md.size());
}

inline std::string sha256_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if(!in) throw ResourceError("cannot read " + p.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(data);
}

// ---------------------------------------------------------------------------------
// Ground-state cache: content-addressed by the canonical term list and tolerances.

struct CacheStats {
    int memory_hits = 0;
    int disk_hits   = 0;
    int misses      = 0;
    int corrupt     = 0;
};

class GroundCache {
  public:
    GroundCache() = default;
    explicit GroundCache(std::filesystem::path dir, bool keep_in_memory = true) : dir_(std::move(dir)), memory_(keep_in_memory) {
        if(!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    static std::string key(const Hamiltonian &h, const SolverOptions &opt) {
        std::ostringstream os;
        os.precision(17);
        os << canonical_terms(h) << "n " << h.n() << "\ntol " << opt.tol << "\ndeg " << opt.degeneracy_rel << '\n';
        return sha256_hex(os.str());
    }

    /// Returns a cached result whose residual is re-verified against `hmat`; corrupt or
    /// inconsistent entries are dropped.
    std::optional<SpectralResult> load(const std::string &k, const SpMat &hmat, const SolverOptions &opt) {
        {
            std::lock_guard<std::mutex> g(mu_);
            auto                        it = mem_.find(k);
            if(it != mem_.end()) {
                ++stats_.memory_hits;
                return it->second;
            }
        }
        if(dir_.empty()) {
            std::lock_guard<std::mutex> g(mu_);
            ++stats_.misses;
            return std::nullopt;
        }
        auto r = read_file(path_of(k));
        if(r) {
            Vec          hx  = hmat * r->ground_vector;
            const double res = (hx - r->E0 * r->ground_vector).norm();
            if(r->ground_vector.size() != hmat.rows() || !(res <= std::max(opt.tol, 10 * r->residual))) r.reset();
        }
        std::lock_guard<std::mutex> g(mu_);
        if(!r) {
            if(std::filesystem::exists(path_of(k))) {
                ++stats_.corrupt;
                std::error_code ec;
                std::filesystem::remove(path_of(k), ec);
            }
            ++stats_.misses;
            return std::nullopt;
        }
        ++stats_.disk_hits;
        if(memory_) mem_[k] = *r;
        return r;
    }

    void save(const std::string &k, const SpectralResult &r) {
        std::lock_guard<std::mutex> g(mu_);
        if(memory_) mem_[k] = r;
        if(!dir_.empty()) write_file(path_of(k), r);
    }

    [[nodiscard]] const CacheStats &stats() const { return stats_; }
    [[nodiscard]] const std::filesystem::path &dir() const { return dir_; }
    [[nodiscard]] std::filesystem::path path_of(const std::string &k) const { return dir_ / (k + ".gs"); }

  private:
    static constexpr char kMagic[8] = {'A', 'L', 'G', 'S', '0', '0', '0', '1'};

    static void put(std::string &buf, const void *p, std::size_t n) { buf.append(static_cast<const char *>(p), n); }

    static void write_file(const std::filesystem::path &p, const SpectralResult &r) {
        std::string        buf;
        const std::int64_t n   = r.ground_vector.size();
        const std::int64_t deg = r.degenerate;
        put(buf, kMagic, 8);
        for(double v : {r.E0, r.E1, r.gap, r.residual, r.width}) put(buf, &v, sizeof v);
        put(buf, &deg, sizeof deg);
        put(buf, &n, sizeof n);
        put(buf, r.ground_vector.data(), static_cast<std::size_t>(n) * sizeof(cplx));
        auto md  = sha256_raw(buf.data(), buf.size());
        auto tmp = p;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if(!out) throw ResourceError("cache: cannot write " + tmp.string());
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            out.write(reinterpret_cast<const char *>(md.data()), 32);
        }
        std::filesystem::rename(tmp, p);
    }

    static std::optional<SpectralResult> read_file(const std::filesystem::path &p) {
        std::ifstream in(p, std::ios::binary);
        if(!in) return std::nullopt;
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::size_t head = 8 + 5 * sizeof(double) + 2 * sizeof(std::int64_t);
        if(data.size() < head + 32 || std::memcmp(data.data(), kMagic, 8) != 0) return std::nullopt;
        auto md = sha256_raw(data.data(), data.size() - 32);
        if(std::memcmp(md.data(), data.data() + data.size() - 32, 32) != 0) return std::nullopt;
        SpectralResult r;
        std::size_t    off = 8;
        auto           get = [&](void *dst, std::size_t n) {
            std::memcpy(dst, data.data() + off, n);
            off += n;
        };
        for(double *v : {&r.E0, &r.E1, &r.gap, &r.residual, &r.width}) get(v, sizeof(double));
        std::int64_t deg = 0, n = 0;
        get(&deg, sizeof deg);
        get(&n, sizeof n);
        if(n < 0 || data.size() != head + static_cast<std::size_t>(n) * sizeof(cplx) + 32) return std::nullopt;
        r.degenerate = deg != 0;
        r.ground_vector.resize(n);
        get(r.ground_vector.data(), static_cast<std::size_t>(n) * sizeof(cplx));
        return r;
    }

    std::filesystem::path                 dir_;
    bool                                  memory_ = true;
    std::map<std::string, SpectralResult> mem_;
    CacheStats                            stats_;
    std::mutex                            mu_;
};

/// Ground state through the cache when one is given.
inline SpectralResult cached_ground_state(const Hamiltonian &h, const SolverOptions &opt, GroundCache *cache, const AssemblyLimits &lim = {},
                                          bool *hit = nullptr) {
    SpMat m = assemble(h, lim);
    if(hit) *hit = false;
    if(!cache) return ground_state(m, opt);
    auto k = GroundCache::key(h, opt);
    if(auto r = cache->load(k, m, opt)) {
        if(hit) *hit = true;
        return *r;
    }
    auto r = ground_state(m, opt);
    cache->save(k, r);
    return r;
}

// ---------------------------------------------------------------------------------
// Exclusive lock on a directory. A lock left by a dead process is taken over.

class DirLock {
  public:
    explicit DirLock(const std::filesystem::path &dir) : path_(dir / ".arealab.lock") {
        std::filesystem::create_directories(dir);
        for(int attempt = 0; attempt < 2; ++attempt) {
            int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if(fd >= 0) {
                std::string pid = std::to_string(::getpid()) + "\n";
                (void)!::write(fd, pid.data(), pid.size());
                ::close(fd);
                held_ = true;
                return;
            }
            std::ifstream in(path_);
            long          other = 0;
            in >> other;
            if(other > 0 && (::kill(static_cast<pid_t>(other), 0) == 0 || errno != ESRCH))
                throw ResourceError("directory " + dir.string() + " is locked by process " + std::to_string(other));
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
        throw ResourceError("cannot acquire lock " + path_.string());
    }
    DirLock(const DirLock &)            = delete;
    DirLock &operator=(const DirLock &) = delete;
    ~DirLock() {
        if(held_) {
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }

  private:
    std::filesystem::path path_;
    bool                  held_ = false;
};

} // namespace arealab
