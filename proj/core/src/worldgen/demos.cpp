#include "relground/worldgen/demos.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relground/rng.hpp"

namespace relground::worldgen {

using labelspace::LabelConfig;
using labelspace::LabelVector;

namespace {

constexpr double kPi = std::numbers::pi;

/// Accumulates demo frames as whole-scene snapshots.
class Timeline {
public:
    explicit Timeline(Scene start) { scenes_.push_back(std::move(start)); }

    void hold(int steps) {
        for (int i = 0; i < steps; ++i) scenes_.push_back(scenes_.back());
    }

    /// Straight-line motion of an object centre over `steps` transitions.
    void move(int id, const Vec3& to, int steps, std::optional<double> yaw_to = std::nullopt) {
        const SceneObject from = scenes_.back().object(id);
        for (int s = 1; s <= steps; ++s) {
            const double a = static_cast<double>(s) / steps;
            Scene next = scenes_.back();
            auto& o = next.object(id);
            o.position = from.position + (to - from.position) * a;
            if (yaw_to) o.yaw = from.yaw + (*yaw_to - from.yaw) * a;
            scenes_.push_back(std::move(next));
        }
    }

    /// Visits waypoints, spreading `steps` over segments by length (at least
    /// one step each).
    void path(int id, const std::vector<Vec3>& waypoints, int steps) {
        std::vector<double> len;
        Vec3 cur = scenes_.back().object(id).position;
        for (const auto& w : waypoints) {
            len.push_back((w - cur).norm());
            cur = w;
        }
        std::vector<int> alloc(waypoints.size(), 1);
        for (int left = steps - static_cast<int>(waypoints.size()); left > 0; --left) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < len.size(); ++i)
                if (len[i] / alloc[i] > len[best] / alloc[best]) best = i;
            ++alloc[best];
        }
        for (std::size_t i = 0; i < waypoints.size(); ++i) move(id, waypoints[i], alloc[i]);
    }

    const Scene& last() const { return scenes_.back(); }
    std::vector<Scene> take() { return std::move(scenes_); }

private:
    std::vector<Scene> scenes_;
};

std::vector<std::string> shuffled_colors(Rng& rng) {
    std::vector<std::string> c{"red", "blue", "green", "brown", "purple", "cyan", "yellow"};
    rng.shuffle(c.begin(), c.end());
    return c;
}

Shape random_solid(Rng& rng) {
    static const Shape s[] = {Shape::cube, Shape::sphere, Shape::cylinder};
    return s[rng.below(3)];
}

Vec3 jitter3(Rng& rng, double a, bool z = false) {
    return {rng.uniform(-a, a), rng.uniform(-a, a), z ? rng.uniform(-a, a) : 0.0};
}

/// Centre of an object whose bottom would rest at `base`.
Vec3 centre_at(const SceneObject& o, const Vec3& base) { return {base.x, base.y, base.z + o.half_extents.z}; }

void finish(Demonstration& demo, std::vector<Scene> scenes, const DemoConfig& cfg, bool geometric) {
    demo.scenes = std::move(scenes);
    demo.ground_truth_S = movers_from_scenes(demo.scenes, demo.target_ids);
    if (geometric) {
        for (int t : demo.target_ids) {
            auto& seq = demo.geometric_labels[t];
            for (const auto& s : demo.scenes)
                seq.push_back(ground_truth_relations(s, t, demo.reference_id, cfg.thresholds));
        }
    }
    if (cfg.render)
        for (const auto& s : demo.scenes) demo.frames.push_back(render_observation(s, cfg.camera, cfg.resolution));
}

SymbolicPlan restrict_to_group(const SymbolicPlan& plan, int group) {
    SymbolicPlan out;
    for (const auto& s : plan.steps)
        if (s.group == group) out.steps.push_back(s);
    return out;
}

}  // namespace

const std::vector<std::string>& chained_kinds() {
    static const std::vector<std::string> k{"c_shape", "off_on_off", "jump_over"};
    return k;
}

const std::vector<std::string>& placement_tasks() {
    static const std::vector<std::string> k{"place_on", "face", "place_in"};
    return k;
}

const LabelConfig& placement_labels() {
    static const LabelConfig cfg = LabelConfig::robot();
    return cfg;
}

MovementPrescriptionSequence movers_from_scenes(const std::vector<Scene>& scenes, const std::vector<int>& targets) {
    MovementPrescriptionSequence S;
    for (std::size_t t = 0; t + 1 < scenes.size(); ++t) {
        std::optional<int> mover;
        for (int id : targets) {
            const auto& a = scenes[t].object(id);
            const auto& b = scenes[t + 1].object(id);
            if ((a.position - b.position).norm() > 1e-12 || a.yaw != b.yaw) {
                if (mover) throw DataError("more than one mover in a single demo step");
                mover = id;
            }
        }
        S.movers.push_back(mover);
    }
    return S;
}

Demonstration generate_repetitive_demo(const std::string& group, int n_targets, std::uint64_t seed,
                                       const DemoConfig& cfg, RepetitiveTiming timing) {
    const auto& names = ThresholdConfig::group_names();
    const auto git = std::find(names.begin(), names.end(), group);
    if (git == names.end()) throw ConfigError("unknown relational group '" + group + "'");
    if (n_targets < 1 || n_targets > 3) throw ConfigError("repetitive demos support 1..3 targets");
    if (timing.move < 1 || timing.lead < 0 || timing.rest < 0) throw ConfigError("invalid repetitive timing");
    const int group_index = static_cast<int>(git - names.begin());

    Rng rng(Rng::mix(seed, 0x5245u + group_index));
    const auto colors = shuffled_colors(rng);
    Demonstration demo;
    demo.kind = "repetitive/" + group;
    demo.seed = seed;

    Scene scene;
    scene.seed = seed;
    const Vec3 rj = jitter3(rng, 0.03);
    SceneObject ref;
    double ref_lift = 0.0;
    if (group == "out_in") {
        ref = make_object(0, "gray", Shape::tray, "large", 0.40, {0.18 + rj.x, rj.y, 0.0});
    } else {
        const Shape k = (group == "on_off" || rng.below(2) == 0) ? Shape::cube : Shape::cylinder;
        if (group == "above_below") ref_lift = 0.06;
        ref = make_object(0, colors[0], k, "large", group == "on_off" ? 0.23 : rng.uniform(0.20, 0.22),
                          {rj.x, rj.y, ref_lift});
    }
    scene.objects.push_back(ref);
    const Vec3 rc{ref.position.x, ref.position.y, 0.0};

    struct Plan {
        Vec3 start;  // base (bottom centre)
        std::vector<Vec3> waypoints;  // centres
    };
    std::vector<SceneObject> targets;
    std::vector<Plan> plans;
    for (int k = 0; k < n_targets; ++k) {
        const double size = group == "out_in" ? 0.12 : group == "on_off" ? 0.13 : rng.uniform(0.13, 0.145);
        const Shape shape = (group == "on_off" || group == "out_in") && rng.below(3) == 1 ? Shape::cube
                                                                                          : random_solid(rng);
        SceneObject tar = make_object(k + 1, colors[k + 1], shape, "small", size, {0, 0, 0});
        const Vec3 j0 = jitter3(rng, 0.02), j1 = jitter3(rng, 0.02);
        const bool flip = (k + seed) % 2 == 1;
        Plan p;
        if (group == "left_right") {
            const double row[] = {-0.30, 0.26, 0.44};
            const double sx = flip ? 0.30 : -0.30;
            p.start = rc + Vec3{sx, row[k], 0} + j0;
            p.waypoints = {centre_at(tar, rc + Vec3{-sx, row[k], 0} + j1)};
        } else if (group == "front_behind") {
            const double col[] = {-0.42, -0.21, 0.28};
            const double sy = flip ? 0.26 : -0.26;
            p.start = rc + Vec3{col[k], sy, 0} + j0;
            p.waypoints = {centre_at(tar, rc + Vec3{col[k], -sy, 0} + j1)};
        } else if (group == "above_below") {
            const Vec3 spot[] = {{-0.28, 0, 0}, {0.28, 0, 0}, {0, 0.30, 0}};
            const double hi = ref.position.z + 0.15 - tar.half_extents.z;
            const double lo = 0.0;
            p.start = rc + spot[k] + j0 + Vec3{0, 0, flip ? hi : lo};
            p.waypoints = {centre_at(tar, rc + spot[k] + j0 + Vec3{0, 0, flip ? lo : hi})};
        } else if (group == "close_far") {
            const Vec3 dir[] = {Vec3{-0.8, 0.6, 0}, Vec3{0.8, 0.6, 0}, Vec3{0, 1, 0}};
            const double far = 0.66, close = 0.30;
            p.start = rc + dir[k] * (flip ? close : far) + j0;
            p.waypoints = {centre_at(tar, rc + dir[k] * (flip ? far : close) + j1)};
        } else if (group == "on_off") {
            const Vec3 away[] = {{-0.36, -0.12, 0}, {0.36, -0.12, 0}, {0.0, 0.36, 0}};
            const Vec3 spot[] = {{-0.066, -0.062, 0}, {0.066, -0.062, 0}, {0.0, 0.070, 0}};
            const double top = ref.top();
            const Vec3 a = rc + away[k] + j0, b = rc + spot[k] + jitter3(rng, 0.001);
            const double carry = top + 0.16;
            if (!flip) {
                p.start = a;
                p.waypoints = {centre_at(tar, {a.x, a.y, carry}), centre_at(tar, {b.x, b.y, carry}),
                               centre_at(tar, {b.x, b.y, top})};
            } else {
                p.start = {b.x, b.y, top};
                p.waypoints = {centre_at(tar, {b.x, b.y, carry}), centre_at(tar, {a.x, a.y, carry}),
                               centre_at(tar, a)};
            }
        } else {  // out_in
            const Vec3 away[] = {{-0.58, -0.25, 0}, {-0.58, 0.02, 0}, {-0.58, 0.28, 0}};
            const Vec3 spot[] = {{-0.085, -0.085, 0}, {0.085, -0.085, 0}, {0.0, 0.085, 0}};
            const double floor = ref.support_top();
            const Vec3 a = rc + away[k] + j0, b = rc + spot[k] + jitter3(rng, 0.005);
            const double carry = 0.20;
            if (!flip) {
                p.start = a;
                p.waypoints = {centre_at(tar, {a.x, a.y, carry}), centre_at(tar, {b.x, b.y, carry}),
                               centre_at(tar, {b.x, b.y, floor})};
            } else {
                p.start = {b.x, b.y, floor};
                p.waypoints = {centre_at(tar, {b.x, b.y, carry}), centre_at(tar, {a.x, a.y, carry}),
                               centre_at(tar, a)};
            }
        }
        tar.position = centre_at(tar, p.start);
        scene.objects.push_back(tar);
        demo.target_ids.push_back(tar.id);
        plans.push_back(std::move(p));
    }
    demo.reference_id = 0;

    Timeline tl(scene);
    tl.hold(timing.lead);
    for (int k = 0; k < n_targets; ++k) {
        tl.path(k + 1, plans[k].waypoints, timing.move);
        tl.hold(timing.rest);
    }
    finish(demo, tl.take(), cfg, true);
    for (int t : demo.target_ids)
        demo.ground_truth_Y[t] = restrict_to_group(plan_from_labels(demo.geometric_labels[t]), group_index);
    return demo;
}

namespace {

struct ChainedScript {
    SceneObject ref;
    SceneObject tar;
    Vec3 start;                         // target base
    std::vector<std::vector<Vec3>> legs;  // centre waypoints per leg
};

/// Nominal (jitter = 0, no detour) or per-seed trajectory of a chained task.
ChainedScript chained_script(const std::string& kind, std::uint64_t seed, bool nominal) {
    Rng rng(Rng::mix(seed, 0xC4A1u));
    const auto colors = shuffled_colors(rng);
    auto jit = [&](double a) { return nominal ? Vec3{} : jitter3(rng, a); };
    const int variant = nominal ? 1 : static_cast<int>(seed % 3);
    ChainedScript s;
    if (kind == "c_shape") {
        const Vec3 rc = Vec3{0, 0.05, 0} + jit(0.02);
        s.ref = make_object(0, colors[0], Shape::cube, "small", 0.14, rc);
        s.tar = make_object(1, colors[1], Shape::sphere, "small", 0.14, {0, 0, 0});
        auto c = [&](double x, double y) { return centre_at(s.tar, rc + Vec3{x, y, 0} + jit(0.015)); };
        s.start = rc + Vec3{-0.26, -0.24, 0} + jit(0.015);
        std::vector<Vec3> b{c(-0.26, 0.24)}, cc{c(0.26, 0.24)}, d{c(0.26, -0.24)};
        // Incidental far excursion at one of the rear corners.
        if (variant == 0) b = {c(-0.44, 0.46), c(-0.26, 0.24)};
        if (variant == 2) cc = {c(0.44, 0.46), c(0.26, 0.24)};
        s.legs = {b, cc, d};
    } else if (kind == "jump_over") {
        const Vec3 rc = Vec3{0, 0.05, 0} + jit(0.02);
        s.ref = make_object(0, colors[0], Shape::cube, "small", 0.14, rc);
        s.tar = make_object(1, colors[1], Shape::cube, "small", 0.14, {0, 0, 0});
        const double lift = s.ref.top() + 0.07;
        const double side = 0.30;
        const Vec3 a = rc + Vec3{-side, 0, 0} + jit(0.015);
        const Vec3 e = rc + Vec3{side, 0, 0} + jit(0.015);
        // Incidental pass in front of or behind the referent at the apex.
        const double dy = variant == 0 ? -0.22 : variant == 2 ? 0.24 : 0.0;
        s.start = a;
        s.legs = {{centre_at(s.tar, {a.x, a.y, lift})},
                  {centre_at(s.tar, {rc.x, rc.y + dy, lift + 0.02})},
                  {centre_at(s.tar, {e.x, e.y, lift})},
                  {centre_at(s.tar, e)}};
    } else if (kind == "off_on_off") {
        const Vec3 rc = Vec3{0, 0.15, 0} + jit(0.02);
        s.ref = make_object(0, "gray", Shape::tray, "large", 0.40, rc);
        s.tar = make_object(1, colors[1], Shape::cube, "small", 0.12, {0, 0, 0});
        const double carry = 0.14;
        const double floor = s.ref.support_top();
        const Vec3 a = Vec3{-0.47, -0.33, 0} + jit(0.015);
        const Vec3 e = Vec3{0.47, -0.33, 0} + jit(0.015);
        const Vec3 in = rc + jit(0.01);
        s.start = a;
        std::vector<Vec3> exit{centre_at(s.tar, {e.x, e.y, carry})};
        // Incidental detour behind the tray on the way out.
        if (variant == 0) exit = {centre_at(s.tar, {0.42, rc.y + 0.52, carry}), centre_at(s.tar, {e.x, e.y, carry})};
        s.legs = {{centre_at(s.tar, {a.x, a.y, carry})},
                  {centre_at(s.tar, {in.x, in.y, carry})},
                  {centre_at(s.tar, {in.x, in.y, floor})},
                  {centre_at(s.tar, {in.x, in.y, carry})},
                  exit,
                  {centre_at(s.tar, e)}};
    } else {
        throw ConfigError("unknown chained demo kind '" + kind + "'");
    }
    s.tar.position = centre_at(s.tar, s.start);
    return s;
}

std::vector<Scene> run_script(const ChainedScript& s, std::uint64_t seed, ChainedTiming timing) {
    Scene scene;
    scene.seed = seed;
    scene.objects = {s.ref, s.tar};
    Timeline tl(scene);
    tl.hold(timing.lead);
    for (const auto& leg : s.legs) {
        // Each waypoint of a leg gets its own `move` block; rests only between legs.
        for (const auto& w : leg) tl.move(1, w, timing.move);
        tl.hold(timing.rest);
    }
    return tl.take();
}

}  // namespace

Demonstration generate_chained_demo(const std::string& kind, std::uint64_t seed, const DemoConfig& cfg,
                                    ChainedTiming timing) {
    if (timing.move < 1 || timing.lead < 0 || timing.rest < 0) throw ConfigError("invalid chained timing");
    Demonstration demo;
    demo.kind = "chained/" + kind;
    demo.seed = seed;
    demo.reference_id = 0;
    demo.target_ids = {1};
    const ChainedScript script = chained_script(kind, seed, false);
    finish(demo, run_script(script, seed, timing), cfg, true);

    // Ground truth comes from the nominal trajectory: the task's invariant
    // plan without the per-seed incidental symbols.
    const ChainedScript nominal = chained_script(kind, seed, true);
    std::vector<LabelVector> labels;
    for (const auto& s : run_script(nominal, seed, timing))
        labels.push_back(ground_truth_relations(s, 1, 0, cfg.thresholds));
    demo.ground_truth_Y[1] = plan_from_labels(labels);
    return demo;
}

Demonstration generate_placement_demo(const std::string& task, std::uint64_t seed, const DemoConfig& cfg) {
    constexpr int window = 2 * kFramesPerSecond;
    constexpr int motion = 10 * kFramesPerSecond;
    Rng rng(Rng::mix(seed, 0x9A7Eu));
    Demonstration demo;
    demo.kind = "placement/" + task;
    demo.seed = seed;
    demo.reference_id = 0;
    demo.target_ids = {1};

    const Vec3 rbase{rng.uniform(-0.25, 0.25), rng.uniform(-0.20, 0.25), 0.0};
    SceneObject ref, tar;
    Pose final_pose;
    Vec3 approach;  // offset of the pre-placement hover point above the final pose
    Vec3 displacement;
    int group = 0;
    if (task == "place_on") {
        group = 0;
        ref = make_object(0, "purple", Shape::cup, "large", rng.uniform(0.14, 0.24), rbase, rng.uniform(-kPi, kPi));
        tar = make_object(1, "red", Shape::cube, "small", rng.uniform(0.08, 0.14), {0, 0, 0});
        final_pose.x = ref.position.x + rng.uniform(-0.01, 0.01);
        final_pose.y = ref.position.y + rng.uniform(-0.01, 0.01);
        final_pose.z = ref.top() + tar.half_extents.z;
        final_pose.yaw = rng.uniform(-0.3, 0.3);
        displacement = {-0.22, -0.10, 0.10};
        approach = {0, 0, 0.12};
    } else if (task == "face") {
        group = 1;
        const double psi = rng.uniform(-kPi, kPi);
        ref = make_object(0, "purple", Shape::cup, "large", rng.uniform(0.17, 0.20), rbase, psi);
        tar = make_object(1, "blue", Shape::cup, "large", rng.uniform(0.14, 0.22), {0, 0, 0});
        const Vec3 u{std::cos(psi), std::sin(psi), 0};
        const double gap = cup_radius(ref) + cup_radius(tar) + 2 * kCupHandleReach + 0.02 + rng.uniform(-0.01, 0.01);
        final_pose.x = ref.position.x + u.x * gap;
        final_pose.y = ref.position.y + u.y * gap;
        final_pose.z = tar.half_extents.z;
        final_pose.yaw = wrap_angle(psi + kPi);
        displacement = {0.0, -0.16, 0.20};
        approach = u * 0.06 + Vec3{0, 0, 0.04};
    } else if (task == "place_in") {
        group = 2;
        ref = make_object(0, "purple", Shape::bowl, "large", rng.uniform(0.22, 0.26), rbase, 0.0, 0.09);
        tar = make_object(1, "yellow", Shape::cube, "small", rng.uniform(0.07, 0.12), {0, 0, 0});
        const double room = ref.inner_half_x() - tar.half_extents.x * std::sqrt(2.0);
        final_pose.x = ref.position.x + rng.uniform(-room, room) * 0.5;
        final_pose.y = ref.position.y + rng.uniform(-room, room) * 0.5;
        final_pose.z = ref.support_top() + tar.half_extents.z;
        final_pose.yaw = rng.uniform(-0.4, 0.4);
        displacement = {0.22, -0.10, 0.14};
        approach = {0, 0, 0.15};
    } else {
        throw ConfigError("unknown placement task '" + task + "'");
    }
    final_pose.roll = rng.uniform(-0.05, 0.05);
    final_pose.pitch = rng.uniform(-0.05, 0.05);

    Pose initial = final_pose;
    const Vec3 j = jitter3(rng, 0.03, true);
    initial.x += displacement.x + j.x;
    initial.y += displacement.y + j.y;
    initial.z += displacement.z + j.z;
    initial.yaw = wrap_angle(final_pose.yaw + rng.uniform(-0.3, 0.3));
    initial.roll = rng.uniform(-0.15, 0.15);
    initial.pitch = rng.uniform(-0.15, 0.15);
    Pose hover = final_pose;
    hover.x += approach.x;
    hover.y += approach.y;
    hover.z += approach.z;

    // Smooth-step interpolation; the first half goes to the hover point.
    auto lerp = [](const Pose& a, const Pose& b, double s) {
        Pose p;
        p.x = a.x + (b.x - a.x) * s;
        p.y = a.y + (b.y - a.y) * s;
        p.z = a.z + (b.z - a.z) * s;
        p.roll = a.roll + (b.roll - a.roll) * s;
        p.pitch = a.pitch + (b.pitch - a.pitch) * s;
        p.yaw = wrap_angle(a.yaw + wrap_angle(b.yaw - a.yaw) * s);
        return p;
    };
    std::vector<Pose> poses;
    for (int f = 0; f < window; ++f) poses.push_back(initial);
    for (int m = 1; m <= motion; ++m) {
        const double s = static_cast<double>(m) / motion;
        const double h = s < 0.5 ? s * 2 : (s - 0.5) * 2;
        const double e = h * h * (3 - 2 * h);
        poses.push_back(s < 0.5 ? lerp(initial, hover, e) : lerp(hover, final_pose, e));
    }
    while (static_cast<int>(poses.size()) < 2 * window + motion) poses.push_back(final_pose);

    std::vector<Scene> scenes;
    for (const auto& p : poses) {
        Scene s;
        s.seed = seed;
        SceneObject t = tar;
        t.position = {p.x, p.y, p.z};
        t.roll = p.roll;
        t.pitch = p.pitch;
        t.yaw = p.yaw;
        s.objects = {ref, t};
        scenes.push_back(std::move(s));
    }
    finish(demo, std::move(scenes), cfg, false);
    demo.ground_truth_poses = std::move(poses);

    const auto& labels = placement_labels();
    const std::size_t T = demo.scenes.size();
    for (std::size_t f = 0; f < T; ++f) {
        LabelVector y(labels.relational().size());
        if (f < static_cast<std::size_t>(window)) y.assignments[group] = 0;
        if (f + window >= T) y.assignments[group] = 1;
        demo.window_labels.push_back(std::move(y));
    }
    demo.ground_truth_Y[1] = plan_from_labels(demo.window_labels);
    return demo;
}

}  // namespace relground::worldgen
