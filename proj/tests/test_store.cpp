#include "arealab/store.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace arealab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    auto p = fs::temp_directory_path() / ("arealab_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

Hamiltonian chain(int n, double g) {
    auto             lat = build_lattice(1, {n}, 1.0);
    std::vector<int> sites(n);
    std::iota(sites.begin(), sites.end(), 0);
    return model_hamiltonian(tfim_model(lat, 1.0, g), sites);
}

} // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(GroundCache, KeyDependsOnModelAndTolerance) {
    SolverOptions a, b;
    b.tol = 1e-8;
    EXPECT_EQ(GroundCache::key(chain(4, 2.0), a), GroundCache::key(chain(4, 2.0), a));
    EXPECT_NE(GroundCache::key(chain(4, 2.0), a), GroundCache::key(chain(4, 2.5), a));
    EXPECT_NE(GroundCache::key(chain(4, 2.0), a), GroundCache::key(chain(5, 2.0), a));
    EXPECT_NE(GroundCache::key(chain(4, 2.0), a), GroundCache::key(chain(4, 2.0), b));
}

TEST(GroundCache, DiskRoundTripReproducesResult) {
    auto          dir = scratch("roundtrip");
    auto          h   = chain(6, 1.5);
    SolverOptions opt;
    SpectralResult first;
    {
        GroundCache c(dir, false);
        bool        hit = true;
        first           = cached_ground_state(h, opt, &c, {}, &hit);
        EXPECT_FALSE(hit);
        EXPECT_EQ(c.stats().misses, 1);
    }
    GroundCache c(dir, false);
    bool        hit = false;
    auto        r   = cached_ground_state(h, opt, &c, {}, &hit);
    EXPECT_TRUE(hit);
    EXPECT_EQ(c.stats().disk_hits, 1);
    EXPECT_EQ(r.E0, first.E0);
    EXPECT_EQ(r.gap, first.gap);
    EXPECT_EQ((r.ground_vector - first.ground_vector).norm(), 0.0);
    fs::remove_all(dir);
}

TEST(GroundCache, CorruptEntryIsRecomputed) {
    auto          dir = scratch("corrupt");
    auto          h   = chain(5, 1.5);
    SolverOptions opt;
    GroundCache   c(dir, false);
    auto          first = cached_ground_state(h, opt, &c);
    auto          path  = c.path_of(GroundCache::key(h, opt));
    ASSERT_TRUE(fs::exists(path));
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(100);
        f.put('\x5a');
    }
    bool hit = true;
    auto r   = cached_ground_state(h, opt, &c, {}, &hit);
    EXPECT_FALSE(hit);
    EXPECT_EQ(c.stats().corrupt, 1);
    EXPECT_NEAR(r.E0, first.E0, 1e-10);
    EXPECT_TRUE(fs::exists(path));
    fs::remove_all(dir);
}

TEST(GroundCache, MemoryHitsWithoutDirectory) {
    GroundCache   c;
    SolverOptions opt;
    auto          h = chain(4, 2.0);
    cached_ground_state(h, opt, &c);
    bool hit = false;
    cached_ground_state(h, opt, &c, {}, &hit);
    EXPECT_TRUE(hit);
    EXPECT_EQ(c.stats().memory_hits, 1);
}

TEST(DirLock, SecondHolderRejectedAndStaleLockTakenOver) {
    auto dir = scratch("lock");
    {
        DirLock a(dir);
        EXPECT_THROW(DirLock b(dir), ResourceError);
    }
    EXPECT_FALSE(fs::exists(dir / ".arealab.lock"));
    {
        std::ofstream(dir / ".arealab.lock") << 999999999 << "\n";
    }
    EXPECT_NO_THROW(DirLock c(dir));
    fs::remove_all(dir);
}
