#include "isinglab/paths.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_map>

namespace ilab {

namespace {

void check_permutation(const std::vector<int>& order, int n, const char* who) {
    if (static_cast<int>(order.size()) != n)
        throw std::invalid_argument(std::string(who) + ": order is not a site permutation");
    std::vector<std::uint8_t> seen(n, 0);
    for (int s : order) {
        if (s < 0 || s >= n || seen[s])
            throw std::invalid_argument(std::string(who) + ": order is not a site permutation");
        seen[s] = 1;
    }
}

std::vector<int> path_ids(const ChainModel& chain, const std::vector<SpinConfig>& path,
                          const char* who) {
    if (path.empty()) throw std::invalid_argument(std::string(who) + ": empty path");
    std::vector<int> ids(path.size());
    for (size_t k = 0; k < path.size(); ++k) {
        ids[k] = chain.state_of(path[k]);
        if (ids[k] < 0) throw std::invalid_argument(std::string(who) + ": path leaves the chain");
        if (k > 0 && chain.edge_index(ids[k - 1], ids[k]) < 0)
            throw std::invalid_argument(std::string(who) + ": path step is not a chain edge");
    }
    return ids;
}

} // namespace

PathEnsemble canonical_paths(const ChainModel& chain, const std::vector<int>& site_order) {
    if (!chain.spin()) throw std::invalid_argument("canonical_paths: chain has no spin context");
    const int n_sites = chain.spin()->domain->size();
    check_permutation(site_order, n_sites, "canonical_paths");

    auto keep = std::make_shared<const ChainModel>(chain);
    auto order = std::make_shared<const std::vector<int>>(site_order);
    auto build = [keep, order](int i, int j) {
        std::vector<SpinConfig> path;
        SpinConfig cur = keep->spin()->configs[i];
        const SpinConfig& dst = keep->spin()->configs[j];
        path.push_back(cur);
        for (int site : *order) {
            if (cur.at(site) == dst.at(site)) continue;
            cur.flip(site);
            if (keep->state_of(cur) < 0)
                throw std::invalid_argument("canonical_paths: path leaves the chain");
            path.push_back(cur);
        }
        return path;
    };

    auto cumulative = std::make_shared<std::vector<double>>();
    double acc = 0;
    for (double w : keep->mu()) cumulative->push_back(acc += w);
    cumulative->back() = 1.0;
    auto draw = [keep, cumulative](Rng& rng) {
        const double u = rng.uniform();
        return static_cast<int>(std::lower_bound(cumulative->begin(), cumulative->end(), u) -
                                cumulative->begin());
    };

    PathEnsemble ens;
    ens.length_bound = n_sites;
    ens.sample = [build, draw](Rng& rng) {
        const int i = draw(rng);
        const int j = draw(rng);
        return build(i, j);
    };
    ens.enumerate = [keep, build](const std::function<void(const std::vector<SpinConfig>&, double)>& fn) {
        for (int i = 0; i < keep->size(); ++i)
            for (int j = 0; j < keep->size(); ++j) fn(build(i, j), keep->mu()[i] * keep->mu()[j]);
    };
    return ens;
}

SinclairBound sinclair_bound(const ChainModel& chain, const PathEnsemble& ensemble, Rng& rng,
                             int sample_budget) {
    if (chain.size() < 2)
        throw std::invalid_argument("sinclair_bound: single-state chain has no variance");
    if (chain.edges().empty()) throw std::invalid_argument("sinclair_bound: chain has no edges");
    if (!ensemble.sample && !ensemble.enumerate)
        throw std::invalid_argument("sinclair_bound: ensemble cannot produce paths");

    double w_min = std::numeric_limits<double>::infinity();
    for (const auto& e : chain.edges())
        w_min = std::min({w_min, e.c / chain.mu()[e.i], e.c / chain.mu()[e.j]});

    const size_t n_edges = chain.edges().size();
    std::vector<double> hit(n_edges, 0.0); // P(e in Pi), either direction
    std::vector<long> stamp(n_edges, -1);
    long path_id = 0;
    int max_len = 0;
    auto absorb = [&](const std::vector<SpinConfig>& path, double weight) {
        const std::vector<int> ids = path_ids(chain, path, "sinclair_bound");
        max_len = std::max(max_len, static_cast<int>(ids.size()) - 1);
        for (size_t k = 1; k < ids.size(); ++k) {
            const int e = chain.edge_index(ids[k - 1], ids[k]);
            if (stamp[e] == path_id) continue;
            stamp[e] = path_id;
            hit[e] += weight;
        }
        ++path_id;
    };

    SinclairBound out;
    const bool exact = ensemble.enumerate && chain.size() <= 1024;
    long n_paths = 0;
    if (exact) {
        double total = 0;
        ensemble.enumerate([&](const std::vector<SpinConfig>& path, double w) {
            absorb(path, w);
            total += w;
        });
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("sinclair_bound: ensemble weights do not sum to one");
        out.exact = true;
    } else {
        if (sample_budget < 1) throw std::invalid_argument("sinclair_bound: empty budget");
        for (int rep = 0; rep < sample_budget; ++rep) absorb(ensemble.sample(rng), 1.0);
        n_paths = sample_budget;
    }

    const int len = ensemble.length_bound > 0 ? std::max(ensemble.length_bound, max_len) : max_len;
    double best = 0, best_se = 0;
    for (size_t e = 0; e < n_edges; ++e) {
        const auto& edge = chain.edges()[e];
        const double denom = std::max(chain.mu()[edge.i], chain.mu()[edge.j]);
        double p = hit[e], se = 0;
        if (!out.exact) {
            // Wilson upper confidence value at z = 2
            const double z2 = 4.0, n = static_cast<double>(n_paths);
            const double ph = hit[e] / n;
            const double center = (ph + z2 / (2 * n)) / (1 + z2 / n);
            const double half =
                std::sqrt(z2) / (1 + z2 / n) * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
            p = center + half;
            se = std::sqrt(ph * (1 - ph) / n);
        }
        if (p / denom > best) {
            best = p / denom;
            best_se = se / denom;
        }
    }
    out.value = len / w_min * best;
    out.std_error = len / w_min * best_se;
    return out;
}

CongestionCheck congestion_lemma_check(const Domain& d, const BoundaryCondition& bc,
                                       const ModelParams& p, const std::vector<int>& site_order,
                                       const SpinConfig& sigma0, int x, int cap) {
    p.validate();
    const int n = d.size();
    if (n > cap || n > 16)
        throw std::length_error("congestion_lemma_check: domain exceeds the enumeration cap");
    check_permutation(site_order, n, "congestion_lemma_check");
    if (x < 0 || x >= n) throw std::invalid_argument("congestion_lemma_check: site out of range");
    if (!sigma0.domain || sigma0.domain->size() != n)
        throw std::invalid_argument("congestion_lemma_check: configuration domain mismatch");

    std::vector<int> pos(n);
    for (int r = 0; r < n; ++r) pos[site_order[r]] = r;

    // Gibbs weights by direct enumeration
    const uint64_t total = 1ull << n;
    std::vector<double> weight(total);
    {
        auto dp = std::make_shared<Domain>(d);
        SpinConfig c = SpinConfig::uniform(dp, -1);
        NeighborTable table = build_neighbor_table(d, bc);
        double H = hamiltonian(c, p, bc);
        std::vector<double> energy(total);
        energy[c.bits()] = H;
        uint64_t bits = c.bits();
        for (uint64_t k = 1; k < total; ++k) {
            const int site = std::countr_zero(k);
            H += delta_energy(c, table, p, site);
            c.flip(site);
            bits ^= 1ull << site;
            energy[bits] = H;
        }
        const double h_min = *std::min_element(energy.begin(), energy.end());
        double z = 0;
        for (uint64_t b = 0; b < total; ++b) z += weight[b] = std::exp(-p.beta * (energy[b] - h_min));
        for (auto& w : weight) w /= z;
    }

    uint64_t mask_lt = 0, mask_ge = 0;
    for (int s = 0; s < n; ++s) (pos[s] < pos[x] ? mask_lt : mask_ge) |= 1ull << s;
    const uint64_t bits0 = sigma0.bits();
    const uint64_t xbit = 1ull << x;

    // the step (sigma0, sigma0^x) lies on pi_{sigma, sigma'} iff sigma
    // matches sigma0 at and after x, sigma' matches it before x, and
    // sigma' flips x
    double lhs = 0;
    for (uint64_t a = 0; a < total; ++a) {
        if (((a ^ bits0) & mask_ge) != 0) continue;
        for (uint64_t b = 0; b < total; ++b) {
            if (((b ^ bits0) & mask_lt) != 0) continue;
            if (((b ^ bits0) & xbit) == 0) continue;
            lhs += weight[a] * weight[b];
        }
    }
    lhs /= weight[bits0];

    int cut = 0;
    for (int s = 0; s < n; ++s) {
        if (pos[s] >= pos[x]) continue;
        const Coord c = d.site(s);
        const Coord nb[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
        for (const Coord& q : nb) {
            const int t = d.index_of(q);
            if (t >= 0 && pos[t] >= pos[x]) ++cut;
        }
    }
    return {lhs, std::exp(2.0 * p.beta * cut)};
}

PathEnsemble block_path_ensemble(DomainPtr d, const BoundaryCondition& bc, const ModelParams& p,
                                 std::vector<std::vector<int>> schedule,
                                 std::function<SpinConfig(Rng&)> start, int cap) {
    p.validate();
    if (!d || d->size() < 1) throw std::invalid_argument("block_path_ensemble: empty domain");
    if (schedule.empty()) throw std::invalid_argument("block_path_ensemble: empty schedule");
    if (!start) throw std::invalid_argument("block_path_ensemble: missing start law");
    int total_len = 0;
    for (const auto& block : schedule) {
        if (block.empty()) throw std::invalid_argument("block_path_ensemble: empty block");
        if (static_cast<int>(block.size()) > cap || block.size() > 30)
            throw std::length_error("block_path_ensemble: block too large");
        std::vector<std::uint8_t> seen(d->size(), 0);
        for (int s : block) {
            if (s < 0 || s >= d->size() || seen[s])
                throw std::invalid_argument("block_path_ensemble: bad block sites");
            seen[s] = 1;
        }
        total_len += static_cast<int>(block.size());
    }

    PathEnsemble ens;
    ens.length_bound = total_len;
    ens.sample = [d, bc, p, schedule = std::move(schedule), start = std::move(start),
                  cap](Rng& rng) {
        SpinConfig cur = start(rng);
        if (!cur.domain || cur.domain->size() != d->size())
            throw std::invalid_argument("block_path_ensemble: start law domain mismatch");
        std::vector<SpinConfig> path{cur};
        for (const auto& block : schedule) {
            BlockConditionalSampler bs(cur, block, bc, p, cap);
            const SpinConfig next = bs.sample(rng);
            for (int site : block) {
                if (cur.at(site) == next.at(site)) continue;
                cur.flip(site);
                path.push_back(cur);
            }
        }
        return path;
    };
    return ens;
}

Flow induced_flow(const ChainModel& chain, const PathEnsemble& ensemble, int n_samples, Rng& rng) {
    if (!chain.spin()) throw std::invalid_argument("induced_flow: chain has no spin context");
    if (!ensemble.sample) throw std::invalid_argument("induced_flow: ensemble cannot sample");
    if (n_samples < 1) throw std::invalid_argument("induced_flow: need at least one sample");

    Flow fl;
    fl.edge.assign(chain.edges().size(), 0.0);
    fl.source.assign(chain.size(), 0.0);
    fl.sink.assign(chain.size(), 0.0);
    const double w = 1.0 / n_samples;

    std::vector<int> erased;
    std::unordered_map<int, int> seen_at;
    for (int rep = 0; rep < n_samples; ++rep) {
        const std::vector<int> ids = path_ids(chain, ensemble.sample(rng), "induced_flow");
        erased.clear();
        seen_at.clear();
        for (int id : ids) {
            auto it = seen_at.find(id);
            if (it != seen_at.end()) {
                for (size_t t = it->second + 1; t < erased.size(); ++t) seen_at.erase(erased[t]);
                erased.resize(it->second + 1);
            } else {
                seen_at.emplace(id, static_cast<int>(erased.size()));
                erased.push_back(id);
            }
        }
        fl.source[erased.front()] += w;
        fl.sink[erased.back()] += w;
        for (size_t k = 1; k < erased.size(); ++k) {
            const int e = chain.edge_index(erased[k - 1], erased[k]);
            fl.edge[e] += chain.edges()[e].i == erased[k - 1] ? w : -w;
        }
    }
    return fl;
}

} // namespace ilab
