#include "dlo/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dlo/errors.hpp"

namespace dlo {

namespace {

constexpr char kMagic[4] = {'D', 'L', 'O', 'P'};
constexpr uint16_t kVersion = 1;

void put_u16(std::ostream& os, uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); }
void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint16_t get_u16(std::istream& is) {
    uint16_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 2)) throw IoError("policy file truncated");
    return v;
}
uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw IoError("policy file truncated");
    return v;
}

}  // namespace

std::array<double, kActionDim> action_lo() {
    return {0.0, -InsertParams::kBoxHalf, -InsertParams::kBoxHalf, -InsertParams::kAlphaHalf,
            -InsertParams::kBoxHalf, -InsertParams::kBoxHalf, -InsertParams::kAlphaHalf};
}

std::array<double, kActionDim> action_hi() {
    return {1.0, InsertParams::kBoxHalf, InsertParams::kBoxHalf, InsertParams::kAlphaHalf,
            InsertParams::kBoxHalf, InsertParams::kBoxHalf, InsertParams::kAlphaHalf};
}

Vec featurize(const RopeState& rope, const Clip& clip, bool reversed) {
    if (rope.size() < 2) throw StateError("featurize needs at least 2 particles");
    Pose2 eff = effective_clip_pose(clip, reversed);
    Vec f;
    f.reserve(kFeatureDim);
    for (int i = 0; i < kFeatureParticles; ++i) {
        int idx = std::min(i, rope.size() - 1);
        Vec2 local = eff.to_local(rope.p[static_cast<std::size_t>(idx)]);
        f.push_back(local.x);
        f.push_back(local.y);
    }
    Vec2 seg = eff.to_local(rope.p[0]) - eff.to_local(rope.p[1]);
    double n = norm(seg);
    f.push_back(n > 1e-12 ? seg.y / n : 0.0);  // sin
    f.push_back(n > 1e-12 ? seg.x / n : 1.0);  // cos
    f.push_back(clip.scale);
    return f;
}

std::array<double, kActionDim> squash_action(const Vec& u) {
    auto lo = action_lo(), hi = action_hi();
    std::array<double, kActionDim> a{};
    for (int i = 0; i < kActionDim; ++i) {
        auto iu = static_cast<std::size_t>(i);
        a[iu] = lo[iu] + (hi[iu] - lo[iu]) * (std::tanh(u[iu]) + 1.0) * 0.5;
    }
    return a;
}

InsertParams Policy::act(const Vec& features) const {
    Vec out = actor.forward(features);
    std::array<double, kActionDim> a{};
    if (static_cast<int>(out.size()) == 2 * kActionDim) {
        a = squash_action(out);  // SAC head: first half is the mean
    } else if (static_cast<int>(out.size()) == kActionDim) {
        for (int i = 0; i < kActionDim; ++i) a[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i)];
    } else {
        throw StateError("policy actor must output 7 or 14 values, got " +
                         std::to_string(out.size()));
    }
    return InsertParams::from_flat(a);
}

Policy make_untrained_policy(uint64_t seed) {
    Rng rng(seed);
    Policy p;
    p.actor = Mlp({kFeatureDim, 64, 64, 2 * kActionDim}, rng);
    p.metadata = {{"algo", "sac"}, {"seed", std::to_string(seed)}, {"steps", "0"}};
    return p;
}

void save_policy(const Policy& policy, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    put_u16(os, kVersion);

    nlohmann::json meta(policy.metadata);
    std::string meta_text = meta.dump();
    put_u32(os, static_cast<uint32_t>(meta_text.size()));
    os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

    const Mlp& net = policy.actor;
    put_u32(os, static_cast<uint32_t>(2 * net.w.size()));
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        auto put_tensor = [&](const std::string& name, int rows, int cols, const double* data) {
            put_u32(os, static_cast<uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            put_u32(os, static_cast<uint32_t>(rows));
            put_u32(os, static_cast<uint32_t>(cols));
            os.write(reinterpret_cast<const char*>(data),
                     static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rows) *
                                                  static_cast<std::size_t>(cols)));
        };
        put_tensor("w" + std::to_string(l), net.w[l].rows, net.w[l].cols, net.w[l].a.data());
        put_tensor("b" + std::to_string(l), static_cast<int>(net.b[l].size()), 1,
                   net.b[l].data());
    }
    if (!os) throw IoError("short write to '" + path + "'");
}

Policy load_policy(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open policy file '" + path + "'");
    char magic[4] = {};
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("'" + path + "' is not a policy file (bad magic)");
    uint16_t version = get_u16(is);
    if (version > kVersion)
        throw IoError("policy version " + std::to_string(version) + " is newer than supported " +
                      std::to_string(kVersion));

    uint32_t meta_len = get_u32(is);
    std::string meta_text(meta_len, '\0');
    if (!is.read(meta_text.data(), meta_len)) throw IoError("policy file truncated");

    Policy p;
    try {
        auto meta = nlohmann::json::parse(meta_text);
        for (auto it = meta.begin(); it != meta.end(); ++it)
            p.metadata[it.key()] = it.value().is_string() ? it.value().get<std::string>()
                                                          : it.value().dump();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("policy metadata is not valid JSON: ") + e.what());
    }

    uint32_t count = get_u32(is);
    if (count == 0 || count % 2 != 0) throw IoError("policy tensor count must be a positive even number");
    p.actor.w.resize(count / 2);
    p.actor.b.resize(count / 2);
    for (uint32_t k = 0; k < count; ++k) {
        uint32_t name_len = get_u32(is);
        if (name_len > 64) throw IoError("policy tensor name too long");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw IoError("policy file truncated");
        uint32_t rows = get_u32(is), cols = get_u32(is);
        if (rows == 0 || cols == 0 || rows > 100000 || cols > 100000)
            throw IoError("policy tensor '" + name + "' has implausible shape");
        std::vector<double> data(static_cast<std::size_t>(rows) * cols);
        if (!is.read(reinterpret_cast<char*>(data.data()),
                     static_cast<std::streamsize>(sizeof(double) * data.size())))
            throw IoError("policy file truncated");
        if (name.size() < 2 || (name[0] != 'w' && name[0] != 'b'))
            throw IoError("unknown tensor '" + name + "'");
        std::size_t layer = std::stoul(name.substr(1));
        if (layer >= p.actor.w.size()) throw IoError("tensor '" + name + "' out of range");
        if (name[0] == 'w') {
            Mat m(static_cast<int>(rows), static_cast<int>(cols));
            m.a = std::move(data);
            p.actor.w[layer] = std::move(m);
        } else {
            if (cols != 1) throw IoError("bias tensor '" + name + "' must have one column");
            p.actor.b[layer] = std::move(data);
        }
    }
    for (std::size_t l = 0; l < p.actor.w.size(); ++l) {
        if (p.actor.w[l].rows != static_cast<int>(p.actor.b[l].size()))
            throw IoError("policy tensors w" + std::to_string(l) + "/b" + std::to_string(l) +
                          " disagree on width");
        if (l > 0 && p.actor.w[l].cols != p.actor.w[l - 1].rows)
            throw IoError("policy layer " + std::to_string(l) + " does not chain");
    }
    return p;
}

}  // namespace dlo
