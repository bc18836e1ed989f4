#include "twin/trajectory.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace twin;
using test::Rng;

namespace {

double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Rotation angle of unit quaternion q, in degrees, sign-independent.
double angle_deg(const Quat& q) { return rad_to_deg(2.0 * std::acos(std::min(1.0, std::abs(q.w)))); }

std::string strj_error(const Bytes& b)
{
    try {
        decode_strj(b);
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

Trajectory random_trajectory(Rng& rng, std::size_t n, double min_step = 1e-3)
{
    std::vector<TrajectorySample> s;
    double t = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        // Single-precision pose values, as stored on disk.
        const Vec3 tr = rng.vec(-2, 2);
        const Quat q = rng.rotation();
        const Vec3 trf{static_cast<float>(tr.x), static_cast<float>(tr.y), static_cast<float>(tr.z)};
        const Quat qf{static_cast<float>(q.w), static_cast<float>(q.x), static_cast<float>(q.y), static_cast<float>(q.z)};
        s.push_back({t, RigidPose(trf, qf)});
        t += rng.uniform(min_step, 0.1);
    }
    return Trajectory(std::move(s));
}

}  // namespace

TEST_CASE("transform_point examples")
{
    CHECK(transform_point(RigidPose{}, {1, 2, 3}) == Vec3{1, 2, 3});
    const RigidPose rz({0, 0, 0}, Quat::from_axis_angle({0, 0, 1}, pi / 2));
    const Vec3 p = transform_point(rz, {1, 0, 0});
    CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(1.0));
    CHECK(p.z == doctest::Approx(0.0));

    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const RigidPose pose = rng.pose(3.0);
        const Vec3 q = rng.vec(-5, 5);
        CHECK(distance(pose.inverse().transform_point(pose.transform_point(q)), q) < 1e-6);
        const RigidPose other = rng.pose(3.0);
        CHECK(distance((pose * other).transform_point(q), pose.transform_point(other.transform_point(q))) < 1e-9);
    }
}

TEST_CASE("pose construction normalizes and rejects bad quaternions")
{
    const RigidPose p({0, 0, 0}, {2, 0, 0, 0});
    CHECK(p.rotation() == Quat{1, 0, 0, 0});
    CHECK_THROWS_AS(RigidPose({0, 0, 0}, {0, 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(RigidPose({0, 0, 0}, {std::nan(""), 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory({}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory({{1.0, {}}, {1.0, {}}}), std::invalid_argument);
}

TEST_CASE("STRJ layout")
{
    const Trajectory t({{0.0, RigidPose{}}});
    const Bytes b = encode_strj(t);
    REQUIRE(b.size() == 44);
    CHECK(std::string(b.begin(), b.begin() + 4) == "STR1");
    ByteReader r(b);
    r.read<std::uint32_t>();
    CHECK(r.read<std::uint32_t>() == 1);
    CHECK(r.read<double>() == 0.0);
    for (int i = 0; i < 3; ++i) CHECK(r.read<float>() == 0.0f);
    CHECK(r.read<float>() == 1.0f);
    CHECK(decode_strj(b) == t);
}

TEST_CASE("STRJ round-trip is bit-exact")
{
    Rng rng(50);
    for (int trial = 0; trial < 20; ++trial) {
        const Trajectory t = random_trajectory(rng, 50);
        const Bytes b = encode_strj(t);
        CHECK(encode_strj(decode_strj(b)) == b);
    }
}

TEST_CASE("STRJ diagnostics")
{
    Bytes b = encode_strj(Trajectory({{0.0, RigidPose{}}, {1.0, RigidPose{}}}));
    Bytes bad = b;
    bad[1] = 'X';
    CHECK(strj_error(bad).find("bad magic") != std::string::npos);
    CHECK(strj_error(Bytes(b.begin(), b.end() - 1)) == "truncated STRJ payload: expected 80 bytes, got 79");

    Bytes same = b;
    const double zero = 0.0;
    std::memcpy(same.data() + 8 + 36, &zero, 8);
    CHECK(strj_error(same).find("timestamps must be strictly increasing") != std::string::npos);

    Bytes zero_quat = b;
    std::memset(zero_quat.data() + 8 + 20, 0, 16);
    CHECK(strj_error(zero_quat).find("sample 0") != std::string::npos);

    Bytes empty;
    ByteWriter w(empty);
    w.tag("STR1");
    w.u32(0);
    CHECK(strj_error(empty).find("no samples") != std::string::npos);
}

TEST_CASE("sample_pose interpolates and clamps")
{
    const RigidPose a({0, 0, 0}, {});
    const RigidPose b({2, 4, 6}, Quat::from_axis_angle({0, 0, 1}, pi / 2));
    const Trajectory t({{0.0, a}, {1.0, b}});

    const RigidPose mid = sample_pose(t, 0.5);
    CHECK(angle_deg(mid.rotation()) == doctest::Approx(45.0));
    CHECK(tool_axis(mid).z == doctest::Approx(1.0));  // rotation about Z
    CHECK(distance(mid.translation(), {1, 2, 3}) < 1e-12);

    const RigidPose quarter = sample_pose(t, 0.25);
    CHECK(angle_deg(quarter.rotation()) == doctest::Approx(22.5));
    CHECK(sample_pose(t, -5.0) == a);
    CHECK(sample_pose(t, 7.0) == b);
    CHECK(sample_pose(t, 1.0) == b);
}

TEST_CASE("slerp splits the arc proportionally")
{
    // The interpolant splits the arc between a and b in proportion u : 1 - u.
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const Quat a = rng.rotation();
        Quat b = rng.rotation();
        if (quat_dot(a, b) < 0) b = -b;
        const double total = 2.0 * std::acos(std::min(1.0, quat_dot(a, b)));
        for (double u : {0.1, 0.25, 0.5, 0.8}) {
            const Quat s = slerp(a, b, u);
            const double from_a = 2.0 * std::acos(std::min(1.0, std::abs(quat_dot(a, s))));
            const double to_b = 2.0 * std::acos(std::min(1.0, std::abs(quat_dot(s, b))));
            CHECK(from_a == doctest::Approx(u * total).epsilon(1e-6));
            CHECK(to_b == doctest::Approx((1 - u) * total).epsilon(1e-6));
        }
    }
}

TEST_CASE("sampled rotation angle agrees with accumulated arc length")
{
    // Sum the small rotations between densely spaced samples of the
    // identity -> 90 deg about Z trajectory; constant angular speed puts
    // 22.5 deg of arc before t = 0.25.
    const Trajectory t({{0.0, RigidPose{}}, {1.0, RigidPose({}, Quat::from_axis_angle({0, 0, 1}, pi / 2))}});
    const int steps = 10000;
    double arc = 0.0;
    Quat prev = sample_pose(t, 0.0).rotation();
    for (int i = 1; i <= steps / 4; ++i) {
        const Quat q = sample_pose(t, static_cast<double>(i) / steps).rotation();
        const Quat step = prev.conjugate() * q;
        arc += 2.0 * std::atan2(std::sqrt(step.x * step.x + step.y * step.y + step.z * step.z), std::abs(step.w));
        prev = q;
    }
    CHECK(rad_to_deg(arc) == doctest::Approx(22.5).epsilon(1e-9));
    CHECK(angle_deg(sample_pose(t, 0.25).rotation()) == doctest::Approx(rad_to_deg(arc)).epsilon(1e-9));
}

TEST_CASE("antipodal samples take the short way and act identically")
{
    const Quat q = Quat::from_axis_angle({1, 0, 0}, pi / 3);
    const Trajectory t1({{0.0, RigidPose{}}, {1.0, RigidPose({}, q)}});
    const Trajectory t2({{0.0, RigidPose{}}, {1.0, RigidPose({}, -q)}});
    Rng rng(4);
    for (double time : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        const Vec3 p = rng.vec(-1, 1);
        CHECK(distance(sample_pose(t1, time).transform_point(p), sample_pose(t2, time).transform_point(p)) < 1e-12);
    }
    CHECK(angle_deg(sample_pose(t2, 0.5).rotation()) == doctest::Approx(30.0));
}

TEST_CASE("sample_pose is continuous at samples")
{
    // Steps of at least 20 ms bound the pose rate, so 1 us moves a point < 1 mm.
    Rng rng(8);
    const Trajectory t = random_trajectory(rng, 20, 0.02);
    for (const TrajectorySample& s : t.samples()) {
        const RigidPose before = sample_pose(t, s.time - 1e-6);
        const RigidPose after = sample_pose(t, s.time + 1e-6);
        const Vec3 p{0.1, 0.2, 0.3};
        CHECK(distance(before.transform_point(p), s.pose.transform_point(p)) < 1e-3);
        CHECK(distance(after.transform_point(p), s.pose.transform_point(p)) < 1e-3);
    }
}

TEST_CASE("compare_poses examples")
{
    const RigidPose e{};
    const PoseDelta same = compare_poses(e, e, 0.1);
    CHECK(same.tip_distance_mm == 0.0);
    CHECK(same.axis_angle_deg == 0.0);

    const PoseDelta moved = compare_poses(e, RigidPose({0.005, 0, 0}, {}), 0.1);
    CHECK(moved.tip_distance_mm == doctest::Approx(5.0));
    CHECK(moved.axis_angle_deg == 0.0);

    const RigidPose rx({0, 0, 0}, Quat::from_axis_angle({1, 0, 0}, pi / 2));
    const PoseDelta rotated = compare_poses(e, rx, 0.1);
    // Tips: expert (0, 0, 0.1); user axis +Z rotated 90 deg about X is (0, -1, 0).
    const Vec3 expert_tip{0, 0, 0.1};
    const Vec3 user_tip{0, -0.1, 0};
    CHECK(rotated.tip_distance_mm == doctest::Approx(norm(expert_tip - user_tip) * 1000.0).epsilon(1e-9));
    CHECK(std::abs(rotated.tip_distance_mm - 141.421) <= 0.001);
    CHECK(rotated.axis_angle_deg == doctest::Approx(90.0));

    const PoseDelta flipped = compare_poses(e, RigidPose({}, Quat::from_axis_angle({0, 1, 0}, pi)), 0.1);
    CHECK(flipped.axis_angle_deg == doctest::Approx(180.0));
}

TEST_CASE("compare_poses symmetry, isometry and roll invariance")
{
    Rng rng(99);
    for (int i = 0; i < 100; ++i) {
        const RigidPose a = rng.pose(), b = rng.pose(), g = rng.pose(2.0);
        const double tip = rng.uniform(0.01, 0.3);
        const PoseDelta ab = compare_poses(a, b, tip);
        const PoseDelta ba = compare_poses(b, a, tip);
        const PoseDelta gab = compare_poses(g * a, g * b, tip);
        CHECK(ab.tip_distance_mm == doctest::Approx(ba.tip_distance_mm).epsilon(1e-9));
        CHECK(ab.axis_angle_deg == doctest::Approx(ba.axis_angle_deg).epsilon(1e-9));
        CHECK(std::abs(gab.tip_distance_mm - ab.tip_distance_mm) < 1e-6);
        CHECK(std::abs(gab.axis_angle_deg - ab.axis_angle_deg) < 1e-5);
        CHECK(ab.tip_distance_mm >= 0.0);
        CHECK(ab.axis_angle_deg >= 0.0);
        CHECK(ab.axis_angle_deg <= 180.0);

        const RigidPose rolled(b.translation(), b.rotation() * Quat::from_axis_angle({0, 0, 1}, rng.uniform(0, 2 * pi)));
        CHECK(std::abs(compare_poses(a, rolled, tip).axis_angle_deg - ab.axis_angle_deg) < 1e-5);
    }
}
