#include "isinglab/chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ilab {

namespace {

uint64_t pair_key(int i, int j) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(i)) << 32) | static_cast<uint32_t>(j);
}

} // namespace

ChainModel::ChainModel(std::vector<double> mu,
                       const std::vector<std::tuple<int, int, double>>& triplets)
    : mu_(std::move(mu)) {
    const int n = static_cast<int>(mu_.size());
    if (n < 1) throw std::invalid_argument("ChainModel: empty state list");
    double total = 0;
    for (double w : mu_) {
        if (!(w > 0) || !std::isfinite(w))
            throw std::invalid_argument("ChainModel: mu must be strictly positive");
        total += w;
    }
    for (double& w : mu_) w /= total;

    std::map<std::pair<int, int>, std::pair<double, int>> merged; // value, occurrences
    for (const auto& [a, b, c] : triplets) {
        if (a < 0 || a >= n || b < 0 || b >= n || a == b)
            throw std::invalid_argument("ChainModel: bad edge indices");
        if (!(c >= 0) || !std::isfinite(c))
            throw std::invalid_argument("ChainModel: conductance must be nonnegative");
        if (c == 0) continue;
        auto key = std::minmax(a, b);
        auto [it, fresh] = merged.try_emplace(key, std::make_pair(c, 1));
        if (!fresh) {
            auto& [value, count] = it->second;
            if (++count > 2) throw std::invalid_argument("ChainModel: edge listed more than twice");
            if (std::abs(value - c) > 1e-12 * std::max({std::abs(value), std::abs(c), 1e-300}))
                throw std::invalid_argument("ChainModel: conductances not symmetric");
        }
    }
    edges_.reserve(merged.size());
    for (const auto& [key, vc] : merged) edges_.push_back({key.first, key.second, vc.first});
    finish();
}

void ChainModel::finish() {
    const int n = size();
    adj_.assign(n, {});
    edge_ix_.clear();
    for (int k = 0; k < static_cast<int>(edges_.size()); ++k) {
        const Edge& e = edges_[k];
        adj_[e.i].emplace_back(e.j, e.c);
        adj_[e.j].emplace_back(e.i, e.c);
        edge_ix_[pair_key(e.i, e.j)] = k;
        edge_ix_[pair_key(e.j, e.i)] = k;
    }
    std::vector<int> root(n);
    for (int i = 0; i < n; ++i) root[i] = i;
    std::function<int(int)> find = [&](int i) {
        while (root[i] != i) i = root[i] = root[root[i]];
        return i;
    };
    for (const Edge& e : edges_) root[find(e.i)] = find(e.j);
    components_ = 0;
    for (int i = 0; i < n; ++i)
        if (find(i) == i) ++components_;
}

int ChainModel::edge_index(int i, int j) const {
    auto it = edge_ix_.find(pair_key(i, j));
    return it == edge_ix_.end() ? -1 : it->second;
}

int ChainModel::component_count(const std::vector<std::uint8_t>& mask) const {
    const int n = size();
    if (static_cast<int>(mask.size()) != n)
        throw std::invalid_argument("ChainModel::component_count: mask size mismatch");
    std::vector<std::uint8_t> seen(n, 0);
    int count = 0;
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (!mask[s] || seen[s]) continue;
        ++count;
        seen[s] = 1;
        stack.assign(1, s);
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (const auto& [w, c] : adj_[v])
                if (mask[w] && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
        }
    }
    return count;
}

double ChainModel::mass(const std::vector<std::uint8_t>& mask) const {
    if (static_cast<int>(mask.size()) != size())
        throw std::invalid_argument("ChainModel::mass: mask size mismatch");
    double m = 0;
    for (int i = 0; i < size(); ++i)
        if (mask[i]) m += mu_[i];
    return m;
}

int ChainModel::state_of(const SpinConfig& c) const {
    if (!spin_) return -1;
    auto it = spin_->index.find(c.bits());
    return it == spin_->index.end() ? -1 : it->second;
}

ChainModel enumerate_chain(DomainPtr d, const BoundaryCondition& bc, const ModelParams& p,
                           const std::function<bool(const SpinConfig&)>& restriction, int cap) {
    p.validate();
    if (!d || d->size() < 1) throw std::invalid_argument("enumerate_chain: empty domain");
    const int n = d->size();
    if (n > 24) throw std::length_error("enumerate_chain: domain too large to enumerate");

    NeighborTable table = build_neighbor_table(*d, bc);
    auto ctx = std::make_shared<ChainModel::SpinContext>();
    ctx->domain = d;
    ctx->bc = bc;
    ctx->params = p;

    // gray-code walk over all 2^n configurations, keeping the admitted ones
    SpinConfig c = SpinConfig::uniform(d, -1);
    std::vector<uint64_t> kept;
    if (!restriction || restriction(c)) kept.push_back(c.bits());
    const uint64_t total = 1ull << n;
    for (uint64_t k = 1; k < total; ++k) {
        c.flip(std::countr_zero(k));
        if (!restriction || restriction(c)) kept.push_back(c.bits());
    }
    if (static_cast<int>(kept.size()) > cap)
        throw std::length_error("enumerate_chain: " + std::to_string(kept.size()) +
                                " states exceed the cap " + std::to_string(cap));
    if (kept.empty()) throw std::invalid_argument("enumerate_chain: restriction admits no state");
    std::sort(kept.begin(), kept.end());

    const int m = static_cast<int>(kept.size());
    std::vector<double> energy(m);
    ctx->configs.reserve(m);
    for (int i = 0; i < m; ++i) {
        ctx->configs.push_back(SpinConfig::from_bits(d, kept[i]));
        ctx->index.emplace(kept[i], i);
        energy[i] = hamiltonian(ctx->configs.back(), p, bc);
    }
    const double h_min = *std::min_element(energy.begin(), energy.end());
    std::vector<double> mu(m);
    for (int i = 0; i < m; ++i) {
        mu[i] = std::exp(-p.beta * (energy[i] - h_min));
        if (!(mu[i] > 0))
            throw std::invalid_argument("enumerate_chain: state weight underflows at this beta");
    }
    // normalize here so conductances mu * rate use the probability weights
    const double z = std::accumulate(mu.begin(), mu.end(), 0.0);
    for (double& w : mu) w /= z;

    std::vector<std::tuple<int, int, double>> triplets;
    for (int i = 0; i < m; ++i) {
        for (int x = 0; x < n; ++x) {
            uint64_t nb = kept[i] ^ (1ull << x);
            auto it = ctx->index.find(nb);
            if (it == ctx->index.end() || it->second < i) continue;
            const int j = it->second;
            const double dH = delta_energy(ctx->configs[i], table, p, x);
            const double cij = mu[i] * flip_rate(p, dH);
            const double cji = mu[j] * flip_rate(p, -dH);
            if (cij == 0 && cji == 0) continue;
            if (std::abs(cij - cji) > 1e-9 * std::max(cij, cji))
                throw std::runtime_error("enumerate_chain: rate family is not reversible");
            triplets.emplace_back(i, j, 0.5 * (cij + cji));
        }
    }

    ChainModel chain(std::move(mu), triplets);
    chain.spin_ = std::move(ctx);
    return chain;
}

std::vector<std::uint8_t> mask_of(const ChainModel& chain,
                                  const std::function<bool(const SpinConfig&)>& pred) {
    if (!chain.spin()) throw std::invalid_argument("mask_of: chain has no spin context");
    if (!pred) throw std::invalid_argument("mask_of: null predicate");
    std::vector<std::uint8_t> mask(chain.size());
    for (int i = 0; i < chain.size(); ++i) mask[i] = pred(chain.spin()->configs[i]) ? 1 : 0;
    return mask;
}

std::vector<std::uint8_t> mask_not(const std::vector<std::uint8_t>& m) {
    std::vector<std::uint8_t> out(m.size());
    for (size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
    return out;
}

void export_chain(const ChainModel& chain, std::ostream& os) {
    os << "chain " << chain.size() << ' ' << chain.edges().size() << '\n';
    os << std::setprecision(17);
    for (double w : chain.mu()) os << w << '\n';
    for (const auto& e : chain.edges()) os << e.i << ' ' << e.j << ' ' << e.c << '\n';
}

ChainModel import_chain(std::istream& is) {
    std::string magic;
    int n = 0, m = 0;
    if (!(is >> magic >> n >> m) || magic != "chain" || n < 1 || m < 0)
        throw std::runtime_error("import_chain: malformed header");
    std::vector<double> mu(n);
    for (double& w : mu)
        if (!(is >> w)) throw std::runtime_error("import_chain: truncated weight list");
    std::vector<std::tuple<int, int, double>> triplets(m);
    for (auto& [i, j, c] : triplets)
        if (!(is >> i >> j >> c)) throw std::runtime_error("import_chain: truncated edge list");
    return ChainModel(std::move(mu), triplets);
}

} // namespace ilab
