#include "isinglab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace ilab {

// ---------------------------------------------------------------- params

void ModelParams::validate() const {
    if (!(beta > 0)) throw std::invalid_argument("ModelParams: beta must be positive");
    if (!(h >= 0)) throw std::invalid_argument("ModelParams: h must be nonnegative");
    if (!(b_exp > 0) || !(b_exp < 0.25))
        throw std::invalid_argument("ModelParams: need 0 < b_exp < 1/4");
    if (!(r_exp > 0) || !(r_exp < b_exp / 2.0))
        throw std::invalid_argument("ModelParams: need 0 < r_exp < b_exp / 2");
    if (family == RateFamily::CustomBounded) {
        if (!custom_rate)
            throw std::invalid_argument("ModelParams: CustomBounded needs a rate callback");
        if (!(w_min > 0) || !(w_max >= w_min))
            throw std::invalid_argument("ModelParams: need 0 < w_min <= w_max");
    }
}

double ModelParams::vertebrate_threshold() const {
    if (!(h > 0)) throw std::domain_error("vertebrate_threshold: requires h > 0");
    return std::pow(h, -2.0 * b_exp);
}

double ModelParams::skeleton_step() const {
    if (!(h > 0)) throw std::domain_error("skeleton_step: requires h > 0");
    return std::pow(h, -r_exp);
}

// ---------------------------------------------------------------- domain

void Domain::finalize() {
    std::sort(sites_.begin(), sites_.end(), [](Coord a, Coord b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
    if (sites_.empty()) throw std::invalid_argument("Domain: empty site set");
    x0_ = x1_ = sites_[0].x;
    y0_ = y1_ = sites_[0].y;
    for (Coord c : sites_) {
        x0_ = std::min(x0_, c.x);
        x1_ = std::max(x1_, c.x);
        y0_ = std::min(y0_, c.y);
        y1_ = std::max(y1_, c.y);
    }
    int w = x1_ - x0_ + 1, h = y1_ - y0_ + 1;
    grid_.assign(static_cast<size_t>(w) * h, -1);
    for (size_t i = 0; i < sites_.size(); ++i) {
        Coord c = sites_[i];
        grid_[static_cast<size_t>(c.y - y0_) * w + (c.x - x0_)] = static_cast<int32_t>(i);
    }
}

int Domain::index_of(Coord c) const {
    if (c.x < x0_ || c.x > x1_ || c.y < y0_ || c.y > y1_) return -1;
    int w = x1_ - x0_ + 1;
    return grid_[static_cast<size_t>(c.y - y0_) * w + (c.x - x0_)];
}

Domain Domain::rectangle(int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("Domain::rectangle: nonpositive side");
    Domain d;
    d.kind_ = DomainKind::Rectangle;
    d.width_ = width;
    d.height_ = height;
    d.sites_.reserve(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) d.sites_.push_back({x, y});
    d.center_ = {(width - 1) / 2.0, (height - 1) / 2.0};
    d.finalize();
    return d;
}

Domain Domain::wulff_box(const WulffBasisPtr& basis, double B_max, double h) {
    if (!basis) throw std::invalid_argument("Domain::wulff_box: null basis");
    if (!(B_max > 0) || !(h > 0))
        throw std::invalid_argument("Domain::wulff_box: need B_max > 0, h > 0");
    Domain d;
    d.kind_ = DomainKind::WulffBox;
    d.outer_ = wulff_shape_of_B(basis, {0, 0}, B_max / h);
    double reach = 0;
    for (const Vec2& p : basis->unit.v) reach = std::max(reach, std::max(std::fabs(p.x), std::fabs(p.y)));
    int R = static_cast<int>(std::ceil(d.outer_.rho * reach)) + 1;
    for (int y = -R; y <= R; ++y)
        for (int x = -R; x <= R; ++x)
            if (d.outer_.contains({static_cast<double>(x), static_cast<double>(y)}, 1e-12))
                d.sites_.push_back({x, y});
    d.center_ = {0, 0};
    d.finalize();
    return d;
}

Domain Domain::annulus(const WulffBasisPtr& basis, double B1, double B2, double h) {
    if (!basis) throw std::invalid_argument("Domain::annulus: null basis");
    if (!(B1 > 0) || !(B2 > B1) || !(h > 0))
        throw std::invalid_argument("Domain::annulus: need 0 < B1 < B2, h > 0");
    Domain d;
    d.kind_ = DomainKind::Annulus;
    d.inner_ = wulff_shape_of_B(basis, {0, 0}, B1 / h);
    d.outer_ = wulff_shape_of_B(basis, {0, 0}, B2 / h);
    double reach = 0;
    for (const Vec2& p : basis->unit.v) reach = std::max(reach, std::max(std::fabs(p.x), std::fabs(p.y)));
    int R = static_cast<int>(std::ceil(d.outer_.rho * reach)) + 1;
    for (int y = -R; y <= R; ++y)
        for (int x = -R; x <= R; ++x) {
            Vec2 p{static_cast<double>(x), static_cast<double>(y)};
            if (d.outer_.contains(p, 1e-12) && !d.inner_.contains(p, -1e-12))
                d.sites_.push_back({x, y});
        }
    d.center_ = {0, 0};
    d.finalize();
    return d;
}

Domain Domain::explicit_sites(std::vector<Coord> sites) {
    Domain d;
    d.kind_ = DomainKind::Explicit;
    d.sites_ = std::move(sites);
    d.finalize();
    double cx = 0, cy = 0;
    for (Coord c : d.sites_) {
        cx += c.x;
        cy += c.y;
    }
    d.center_ = {cx / d.sites_.size(), cy / d.sites_.size()};
    return d;
}

// ------------------------------------------------------------- boundary

BoundaryCondition BoundaryCondition::minus() {
    BoundaryCondition b;
    b.kind_ = Kind::UniformMinus;
    return b;
}

BoundaryCondition BoundaryCondition::plus() {
    BoundaryCondition b;
    b.kind_ = Kind::UniformPlus;
    return b;
}

BoundaryCondition BoundaryCondition::split(double theta, Vec2 center) {
    BoundaryCondition b;
    b.kind_ = Kind::Split;
    b.theta_ = theta;
    b.center_ = center;
    return b;
}

BoundaryCondition BoundaryCondition::pair(int inner_sign, int outer_sign, WulffShape inner_shape) {
    if (std::abs(inner_sign) != 1 || std::abs(outer_sign) != 1)
        throw std::invalid_argument("BoundaryCondition::pair: signs must be +-1");
    BoundaryCondition b;
    b.kind_ = Kind::Pair;
    b.inner_sign_ = inner_sign;
    b.outer_sign_ = outer_sign;
    b.inner_shape_ = std::move(inner_shape);
    return b;
}

BoundaryCondition BoundaryCondition::explicit_map(std::unordered_map<int64_t, int8_t> spins) {
    BoundaryCondition b;
    b.kind_ = Kind::Explicit;
    b.map_ = std::make_shared<const std::unordered_map<int64_t, int8_t>>(std::move(spins));
    return b;
}

int BoundaryCondition::spin_at(Coord c) const {
    switch (kind_) {
        case Kind::UniformMinus: return -1;
        case Kind::UniformPlus: return 1;
        case Kind::Split: {
            double u = (c.x - center_.x) * std::cos(theta_) + (c.y - center_.y) * std::sin(theta_);
            return u <= 1e-12 ? 1 : -1;
        }
        case Kind::Pair:
            return inner_shape_.contains({static_cast<double>(c.x), static_cast<double>(c.y)}, 1e-12)
                       ? inner_sign_
                       : outer_sign_;
        case Kind::Explicit: {
            auto it = map_->find(key(c));
            if (it == map_->end())
                throw std::out_of_range("explicit boundary: unmapped site (" +
                                        std::to_string(c.x) + "," + std::to_string(c.y) + ")");
            return it->second;
        }
    }
    throw std::logic_error("unreachable");
}

// ------------------------------------------------------------ spin config

SpinConfig SpinConfig::uniform(DomainPtr d, int8_t value) {
    if (value != 1 && value != -1) throw std::invalid_argument("SpinConfig: spins are +-1");
    SpinConfig c;
    c.domain = std::move(d);
    c.s.assign(static_cast<size_t>(c.domain->size()), value);
    return c;
}

SpinConfig SpinConfig::from_bits(DomainPtr d, uint64_t bits) {
    if (d->size() > 64) throw std::invalid_argument("SpinConfig::from_bits: domain too large");
    SpinConfig c;
    c.domain = std::move(d);
    int n = c.domain->size();
    c.s.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        c.s[static_cast<size_t>(i)] = (bits >> i) & 1 ? 1 : -1;
    return c;
}

uint64_t SpinConfig::bits() const {
    if (s.size() > 64) throw std::invalid_argument("SpinConfig::bits: domain too large");
    uint64_t b = 0;
    for (size_t i = 0; i < s.size(); ++i)
        if (s[i] > 0) b |= (1ull << i);
    return b;
}

long long SpinConfig::magnetization() const {
    long long m = 0;
    for (int8_t v : s) m += v;
    return m;
}

double SpinConfig::magnetization_density() const {
    return static_cast<double>(magnetization()) / static_cast<double>(s.size());
}

// --------------------------------------------------------- neighbor table

NeighborTable build_neighbor_table(const Domain& d, const BoundaryCondition& bc) {
    NeighborTable t;
    int n = d.size();
    t.nbr.assign(static_cast<size_t>(n) * 4, 0);
    std::unordered_map<int64_t, int32_t> ghost_index;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int i = 0; i < n; ++i) {
        Coord c = d.site(i);
        for (int k = 0; k < 4; ++k) {
            Coord nb{c.x + dx[k], c.y + dy[k]};
            int j = d.index_of(nb);
            if (j >= 0) {
                t.nbr[static_cast<size_t>(i) * 4 + k] = j;
            } else {
                int64_t key = BoundaryCondition::key(nb);
                auto [it, fresh] = ghost_index.try_emplace(
                    key, static_cast<int32_t>(t.ghost_coords.size()));
                if (fresh) {
                    t.ghost_coords.push_back(nb);
                    t.ghost_spins.push_back(static_cast<int8_t>(bc.spin_at(nb)));
                }
                t.nbr[static_cast<size_t>(i) * 4 + k] = -(it->second + 1);
            }
        }
    }
    return t;
}

// ----------------------------------------------------------------- energy

double hamiltonian(const SpinConfig& config, const ModelParams& p, const BoundaryCondition& bc) {
    const Domain& d = *config.domain;
    double pair_sum = 0;    // internal pairs, counted once
    double boundary_sum = 0;
    long long mag = 0;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int i = 0; i < d.size(); ++i) {
        Coord c = d.site(i);
        int si = config.at(i);
        mag += si;
        for (int k = 0; k < 4; ++k) {
            Coord nb{c.x + dx[k], c.y + dy[k]};
            int j = d.index_of(nb);
            if (j >= 0) {
                if (j > i) pair_sum += si * config.at(j);
            } else {
                boundary_sum += si * bc.spin_at(nb);
            }
        }
    }
    return -0.5 * pair_sum - 0.5 * boundary_sum - 0.5 * p.h * static_cast<double>(mag);
}

double delta_energy(const SpinConfig& config, const NeighborTable& t, const ModelParams& p,
                    int site) {
    int nbr_sum = 0;
    for (int k = 0; k < 4; ++k)
        nbr_sum += t.spin_of_entry(config, t.nbr[static_cast<size_t>(site) * 4 + k]);
    return config.at(site) * (static_cast<double>(nbr_sum) + p.h);
}

double delta_energy(const SpinConfig& config, const ModelParams& p, const BoundaryCondition& bc,
                    int site) {
    const Domain& d = *config.domain;
    Coord c = d.site(site);
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    int nbr_sum = 0;
    for (int k = 0; k < 4; ++k) {
        Coord nb{c.x + dx[k], c.y + dy[k]};
        int j = d.index_of(nb);
        nbr_sum += j >= 0 ? config.at(j) : bc.spin_at(nb);
    }
    return config.at(site) * (static_cast<double>(nbr_sum) + p.h);
}

double flip_rate(const ModelParams& p, double delta_H) {
    switch (p.family) {
        case RateFamily::Metropolis:
            return delta_H <= 0 ? 1.0 : std::exp(-p.beta * delta_H);
        case RateFamily::HeatBath:
            return 1.0 / (1.0 + std::exp(p.beta * delta_H));
        case RateFamily::CustomBounded: {
            if (!p.custom_rate)
                throw std::invalid_argument("flip_rate: CustomBounded without a callback");
            double w = p.custom_rate(p.beta, delta_H);
            if (!(w >= p.w_min) || !(w <= p.w_max))
                throw std::domain_error("flip_rate: custom rate " + std::to_string(w) +
                                        " outside declared bounds [" + std::to_string(p.w_min) +
                                        ", " + std::to_string(p.w_max) + "]");
            return w;
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------- partition sums

namespace {

// streaming log-sum-exp accumulator
struct LogSum {
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0;
    void push(double x) {
        if (x <= max) {
            sum += std::exp(x - max);
        } else {
            sum = sum * std::exp(max - x) + 1.0;
            max = x;
        }
    }
    double value() const { return max + std::log(sum); }
};

double log_Z_enumerate(const Domain& d, const BoundaryCondition& bc, const ModelParams& p,
                       int cap) {
    int n = d.size();
    if (n > cap)
        throw std::invalid_argument("log_partition_function: " + std::to_string(n) +
                                    " sites exceed the enumeration cap " + std::to_string(cap));
    if (n > 30) throw std::invalid_argument("log_partition_function: enumeration cap too large");
    NeighborTable t = build_neighbor_table(d, bc);
    SpinConfig c = SpinConfig::uniform(std::make_shared<Domain>(d), -1);
    double H = hamiltonian(c, p, bc);
    LogSum ls;
    ls.push(-p.beta * H);
    uint64_t total = 1ull << n;
    for (uint64_t k = 1; k < total; ++k) {
        int site = std::countr_zero(k); // gray-code flip position
        H += delta_energy(c, t, p, site);
        c.flip(site);
        ls.push(-p.beta * H);
    }
    return ls.value();
}

double log_Z_transfer(const Domain& d, const BoundaryCondition& bc, const ModelParams& p) {
    if (d.kind() != DomainKind::Rectangle)
        throw std::invalid_argument("TransferMatrix needs a rectangle domain");
    int W = d.width(), H = d.height();
    bool transposed = false;
    if (W > 22) {
        if (H > 22)
            throw std::invalid_argument("TransferMatrix: both sides exceed 22");
        std::swap(W, H);
        transposed = true;
    }
    auto coord = [&](int u, int v) -> Coord { return transposed ? Coord{v, u} : Coord{u, v}; };
    size_t states = 1ull << W;
    // row 0 never reads the fringe (its up-neighbors are boundary spins), so
    // the initial mass sits on a single state
    std::vector<double> vec(states, 0.0), nxt(states);
    vec[0] = 1.0;
    double log_scale = 0;
    // process sites in (v, u) order; fringe bit u holds the spin above
    for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
            // constant couplings into fixed boundary spins
            double field = p.h;
            if (u == 0) field += bc.spin_at(coord(-1, v));
            if (u == W - 1) field += bc.spin_at(coord(W, v));
            if (v == H - 1) field += bc.spin_at(coord(u, H));
            int up_boundary = (v == 0) ? bc.spin_at(coord(u, -1)) : 0;
            std::fill(nxt.begin(), nxt.end(), 0.0);
            for (size_t st = 0; st < states; ++st) {
                double w = vec[st];
                if (w == 0) continue;
                int up = (v == 0) ? up_boundary : ((st >> u) & 1 ? 1 : -1);
                int left = (u == 0) ? 0 : ((st >> (u - 1)) & 1 ? 1 : -1);
                for (int spin = -1; spin <= 1; spin += 2) {
                    // bond terms counted at the later site; beta(1/2)(...) per pair
                    double e = 0.5 * spin * (up + left + field);
                    size_t st2 = (st & ~(1ull << u)) | (spin > 0 ? (1ull << u) : 0);
                    nxt[st2] += w * std::exp(p.beta * e);
                }
            }
            vec.swap(nxt);
            double m = 0;
            for (double x : vec) m = std::max(m, x);
            if (m > 1e100 || (m > 0 && m < 1e-100)) {
                double s = 1.0 / m;
                for (double& x : vec) x *= s;
                log_scale += std::log(m);
            }
        }
    }
    double total = 0;
    for (double x : vec) total += x;
    return std::log(total) + log_scale;
}

} // namespace

double log_partition_function(const Domain& d, const BoundaryCondition& bc,
                              const ModelParams& p, ZMethod method, int cap) {
    p.validate();
    switch (method) {
        case ZMethod::Enumerate: return log_Z_enumerate(d, bc, p, cap);
        case ZMethod::TransferMatrix: return log_Z_transfer(d, bc, p);
    }
    throw std::logic_error("unreachable");
}

// --------------------------------------------------------------- sampling

ExactGibbsSampler::ExactGibbsSampler(DomainPtr d, const BoundaryCondition& bc,
                                     const ModelParams& p, int cap) {
    p.validate();
    domain_ = std::move(d);
    int n = domain_->size();
    if (n > cap || n > 30)
        throw std::invalid_argument("ExactGibbsSampler: domain exceeds enumeration cap");
    NeighborTable t = build_neighbor_table(*domain_, bc);
    SpinConfig c = SpinConfig::uniform(domain_, -1);
    double H = hamiltonian(c, p, bc);
    uint64_t total = 1ull << n;
    // gray-code enumeration: record energies indexed by configuration bits
    std::vector<double> energy(total);
    uint64_t gray = 0;
    energy[0] = H;
    for (uint64_t k = 1; k < total; ++k) {
        int site = std::countr_zero(k);
        H += delta_energy(c, t, p, site);
        c.flip(site);
        gray ^= (1ull << site);
        energy[gray] = H;
    }
    double emin = *std::min_element(energy.begin(), energy.end());
    cumulative_.resize(total);
    double run = 0;
    for (uint64_t b = 0; b < total; ++b) {
        run += std::exp(-p.beta * (energy[b] - emin));
        cumulative_[b] = run;
    }
    log_Z_ = std::log(run) - p.beta * emin;
    double norm = run;
    for (double& x : cumulative_) x /= norm;
    cumulative_.back() = 1.0;
}

SpinConfig ExactGibbsSampler::sample(Rng& rng) const {
    double u = rng.uniform();
    size_t idx = static_cast<size_t>(
        std::lower_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    if (idx >= cumulative_.size()) idx = cumulative_.size() - 1;
    return SpinConfig::from_bits(domain_, idx);
}

double ExactGibbsSampler::probability(uint64_t bits) const {
    if (bits >= cumulative_.size()) throw std::out_of_range("probability: bad configuration");
    double lo = bits == 0 ? 0.0 : cumulative_[bits - 1];
    return cumulative_[bits] - lo;
}

BlockConditionalSampler::BlockConditionalSampler(const SpinConfig& base,
                                                 std::vector<int> block_sites,
                                                 const BoundaryCondition& bc,
                                                 const ModelParams& p, int cap)
    : base_(base), block_(std::move(block_sites)) {
    p.validate();
    size_t k = block_.size();
    if (k == 0) throw std::invalid_argument("BlockConditionalSampler: empty block");
    if (static_cast<int>(k) > cap || k > 30)
        throw std::invalid_argument("BlockConditionalSampler: block exceeds enumeration cap");
    for (int s : block_)
        if (s < 0 || s >= base.domain->size())
            throw std::out_of_range("BlockConditionalSampler: site outside domain");
    NeighborTable t = build_neighbor_table(*base.domain, bc);
    SpinConfig c = base;
    for (int s : block_) c.s[static_cast<size_t>(s)] = -1;
    double H = hamiltonian(c, p, bc);
    uint64_t total = 1ull << k;
    std::vector<double> energy(total);
    energy[0] = H;
    uint64_t gray = 0;
    for (uint64_t i = 1; i < total; ++i) {
        int pos = std::countr_zero(i);
        int site = block_[static_cast<size_t>(pos)];
        H += delta_energy(c, t, p, site);
        c.flip(site);
        gray ^= (1ull << pos);
        energy[gray] = H;
    }
    double emin = *std::min_element(energy.begin(), energy.end());
    cumulative_.resize(total);
    double run = 0;
    for (uint64_t b = 0; b < total; ++b) {
        run += std::exp(-p.beta * (energy[b] - emin));
        cumulative_[b] = run;
    }
    for (double& x : cumulative_) x /= run;
    cumulative_.back() = 1.0;
}

SpinConfig BlockConditionalSampler::sample(Rng& rng) const {
    double u = rng.uniform();
    size_t idx = static_cast<size_t>(
        std::lower_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    if (idx >= cumulative_.size()) idx = cumulative_.size() - 1;
    SpinConfig out = base_;
    for (size_t pos = 0; pos < block_.size(); ++pos)
        out.s[static_cast<size_t>(block_[pos])] = (idx >> pos) & 1 ? 1 : -1;
    return out;
}

} // namespace ilab
