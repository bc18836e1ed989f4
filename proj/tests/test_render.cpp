#include "twin/mesh_io.hpp"
#include "twin/render.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace twin;
using test::Rng;

namespace {

PinholeCamera axis_camera(double fov, int w, int h, double near = 0.1, double far = 10.0)
{
    return PinholeCamera::look_at({0, 0, 0}, {0, 0, -1}, {0, 1, 0}, fov, w, h, near, far);
}

TriangleMesh quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, Rgb8 color)
{
    return {{a, b, c, d}, {{{0, 1, 2}}, {{0, 2, 3}}}, color};
}

// Per-pixel number of triangles of `mesh` whose rasterization covers the pixel.
std::vector<int> coverage(const PinholeCamera& cam, const TriangleMesh& mesh)
{
    std::vector<int> count(static_cast<std::size_t>(cam.width) * cam.height, 0);
    for (const auto& tri : mesh.triangles) {
        TriangleMesh single{mesh.vertices, {tri}, mesh.base_color};
        GeometryBuffers gb(cam.width, cam.height);
        rasterize_mesh(gb, cam, single);
        for (std::size_t i = 0; i < count.size(); ++i) count[i] += gb.depth[i] < 1.0f ? 1 : 0;
    }
    return count;
}

PinholeCamera random_camera(Rng& rng, int w, int h)
{
    while (true) {
        const Vec3 eye = rng.vec(-3, 3);
        const Vec3 target = rng.vec(-0.5, 0.5);
        if (norm(target - eye) < 0.5) continue;
        const double near = rng.uniform(0.05, 0.5);
        return PinholeCamera::look_at(eye, target, {0, 1, 0}, rng.uniform(30, 100), w, h, near,
                                      near + rng.uniform(1.0, 8.0));
    }
}

std::pair<int, int> find_color(const RgbImage& img, int x0, int x1, Rgb8 c)
{
    for (int y = 0; y < img.height; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (img.at(x, y) == c) return {x, y};
        }
    }
    return {-1, -1};
}

}  // namespace

TEST_CASE("depth quantization")
{
    CHECK(quantize_depth(2.6, 0.1, 5.1) == std::optional<std::uint8_t>(127));
    CHECK(quantize_depth(0.1, 0.1, 5.1) == std::optional<std::uint8_t>(0));
    CHECK_FALSE(quantize_depth(5.1, 0.1, 5.1).has_value());
    CHECK_FALSE(quantize_depth(7.0, 0.1, 5.1).has_value());
    CHECK_FALSE(quantize_depth(0.09, 0.1, 5.1).has_value());
    CHECK(quantize_depth(0.1 + 0.9999 * 5.0, 0.1, 5.1) == std::optional<std::uint8_t>(254));
    CHECK(quantize_depth(std::nextafter(5.1, 0.0), 0.1, 5.1) == std::optional<std::uint8_t>(254));
    CHECK_FALSE(quantize_depth(std::nan(""), 0.1, 5.1).has_value());
}

TEST_CASE("projection")
{
    const PinholeCamera cam = axis_camera(90.0, 1024, 1024);
    CHECK(cam.focal_px() == doctest::Approx(512.0));
    const auto center = project(cam, {0, 0, -3});
    REQUIRE(center);
    CHECK(center->x == 512);
    CHECK(center->y == 512);
    CHECK(center->z_view == doctest::Approx(3.0));

    const auto right = project(cam, {1, 0, -2});
    REQUIRE(right);
    CHECK(right->x == 768);
    const auto up = project(cam, {0, 0.9, -2});
    REQUIRE(up);
    CHECK(up->y == 281);  // 512 - 512 * 0.45: +Y is up, rows grow downwards

    CHECK_FALSE(project(cam, {0, 0, 1}).has_value());
    CHECK_FALSE(project(cam, {0, 0, -0.05}).has_value());
    CHECK_FALSE(project(cam, {5, 0, -1}).has_value());
    CHECK_FALSE(project(cam, {0, 0, -10}).has_value());
}

TEST_CASE("camera construction errors")
{
    CHECK_THROWS_AS(PinholeCamera::look_at({0, 0, 0}, {0, 1, 0}, {0, 1, 0}, 60, 8, 8, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(PinholeCamera::look_at({0, 0, 0}, {0, 0, 0}, {0, 1, 0}, 60, 8, 8, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(axis_camera(0.0, 8, 8), std::invalid_argument);
    CHECK_THROWS_AS(axis_camera(60.0, 8, 8, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("packing order")
{
    const Rgb8 red{255, 0, 0}, blue{0, 0, 255};
    CHECK(pack_cell(10, red) < pack_cell(20, blue));
    CHECK(pack_cell(10, blue) == 0x0A0000FFu);
    CHECK(pack_cell(10, red) == 0x0AFF0000u);
    CHECK(std::min(pack_cell(10, blue), pack_cell(10, red)) == pack_cell(10, blue));
    CHECK(cell_depth(pack_cell(254, {255, 255, 255})) == 254);
    CHECK(pack_cell(254, {255, 255, 255}) != empty_cell);
    CHECK(cell_color(pack_cell(3, {1, 2, 3})) == Rgb8{1, 2, 3});

    Rng rng(6);
    for (int i = 0; i < 10000; ++i) {
        const auto d1 = static_cast<std::uint8_t>(rng.below(255));
        const auto d2 = static_cast<std::uint8_t>(rng.below(255));
        const Rgb8 c1 = rng.color(), c2 = rng.color();
        if (d1 < d2) CHECK(pack_cell(d1, c1) < pack_cell(d2, c2));
    }
}

TEST_CASE("two points on one pixel")
{
    const PinholeCamera cam = axis_camera(90.0, 16, 16, 0.1, 5.1);
    PointCloudFrame f;
    f.positions = {{0, 0, -0.3f}, {0, 0, -0.5f}};
    f.colors = {{255, 0, 0}, {0, 0, 255}};
    PackedFramebuffer fb(16, 16);
    splat_points(fb, cam, f);
    CHECK(cell_color(fb.at(8, 8)) == Rgb8{255, 0, 0});

    // Equal depth: the smaller packed integer wins.
    f.positions = {{0, 0, -0.3f}, {0, 0, -0.3f}};
    f.colors = {{255, 0, 0}, {0, 0, 255}};
    fb.clear();
    splat_points(fb, cam, f);
    CHECK(cell_color(fb.at(8, 8)) == Rgb8{0, 0, 255});
    CHECK(fb.at(0, 0) == empty_cell);
}

TEST_CASE("splatting equals the per-pixel minimum oracle")
{
    Rng rng(10000);
    const Aabb box{{-1, -1, -1}, {1, 1, 1}};
    for (int trial = 0; trial < 5; ++trial) {
        const PinholeCamera cam = random_camera(rng, 96 + static_cast<int>(rng.below(64)), 64 + static_cast<int>(rng.below(64)));
        // Few pixels and many points force plenty of collisions.
        const PointCloudFrame f = test::random_frame(rng, 10000, box);
        PackedFramebuffer fb(cam.width, cam.height);
        splat_points(fb, cam, f);
        const auto oracle = test::oracle_splat(cam, f);
        CHECK(std::equal(fb.cells().begin(), fb.cells().end(), oracle.begin(), oracle.end()));
        CHECK(std::count(oracle.begin(), oracle.end(), empty_cell) < static_cast<long>(oracle.size()));
    }
}

TEST_CASE("worker count and point order do not change the framebuffer")
{
    Rng rng(77);
    const PointCloudFrame f = test::random_frame(rng, 20000, {{-1, -1, -1}, {1, 1, 1}});
    const PinholeCamera cam = random_camera(rng, 64, 64);
    PackedFramebuffer reference(64, 64);
    splat_points(reference, cam, f, 1);
    for (unsigned workers : {2u, 3u, 8u}) {
        PackedFramebuffer fb(64, 64);
        splat_points(fb, cam, f, workers);
        CHECK(fb == reference);
    }
    std::vector<std::size_t> order(f.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    PackedFramebuffer shuffled(64, 64);
    splat_indices(shuffled, cam, f, order);
    CHECK(shuffled == reference);
    for (std::uint32_t v : reference.cells()) {
        if (v != empty_cell) CHECK(cell_depth(v) <= 254);
    }
}

TEST_CASE("full-screen triangle at constant depth")
{
    const PinholeCamera cam = axis_camera(90.0, 32, 32, 0.5, 4.5);
    const double d = 2.0;
    const TriangleMesh tri{{{-100, -100, -d}, {100, -100, -d}, {0, 100, -d}}, {{{0, 1, 2}}}, {200, 100, 50}};
    GeometryBuffers gb(32, 32);
    rasterize_mesh(gb, cam, tri);
    for (std::size_t i = 0; i < gb.depth.size(); ++i) {
        CHECK(gb.depth[i] == doctest::Approx((d - 0.5) / 4.0).epsilon(1e-6));
        CHECK(static_cast<int>(std::floor(gb.depth[i] * 255.0)) == *quantize_depth(d, 0.5, 4.5));
        CHECK(gb.color[i] == Rgb8{200, 100, 50});  // facing the headlight: full shade
    }
}

TEST_CASE("closer triangle wins the z-test")
{
    const PinholeCamera cam = axis_camera(90.0, 32, 32);
    const TriangleMesh near_quad = quad({-0.2, -0.2, -1}, {0.2, -0.2, -1}, {0.2, 0.2, -1}, {-0.2, 0.2, -1}, {255, 0, 0});
    const TriangleMesh far_quad = quad({-2, -2, -2}, {2, -2, -2}, {2, 2, -2}, {-2, 2, -2}, {0, 255, 0});
    for (int order = 0; order < 2; ++order) {
        GeometryBuffers gb(32, 32);
        rasterize_mesh(gb, cam, order == 0 ? near_quad : far_quad);
        rasterize_mesh(gb, cam, order == 0 ? far_quad : near_quad);
        CHECK(gb.color[16 * 32 + 16] == Rgb8{255, 0, 0});
        CHECK(gb.color[1 * 32 + 1] == Rgb8{0, 255, 0});
    }
}

TEST_CASE("shading is two-sided with an ambient floor")
{
    const PinholeCamera cam = axis_camera(90.0, 16, 16);
    // Two windings of the same quad.
    TriangleMesh front = quad({-1, -1, -2}, {1, -1, -2}, {1, 1, -2}, {-1, 1, -2}, {100, 100, 100});
    TriangleMesh back = front;
    for (auto& t : back.triangles) std::swap(t[1], t[2]);
    GeometryBuffers a(16, 16), b(16, 16);
    rasterize_mesh(a, cam, front);
    rasterize_mesh(b, cam, back);
    CHECK(a.color == b.color);

    // A plane seen almost edge-on is shaded at the floor.
    const TriangleMesh grazing = quad({-5, -0.5, -1}, {5, -0.5, -1}, {5, -0.499, -9}, {-5, -0.499, -9}, {100, 100, 100});
    GeometryBuffers g(16, 16);
    rasterize_mesh(g, cam, grazing);
    bool any = false;
    for (std::size_t i = 0; i < g.color.size(); ++i) {
        if (g.depth[i] < 1.0f) {
            any = true;
            CHECK(g.color[i] == Rgb8{20, 20, 20});
        }
    }
    CHECK(any);
}

TEST_CASE("a quad tiling the screen covers every pixel exactly once")
{
    for (int size : {16, 17, 64}) {
        const PinholeCamera cam = axis_camera(90.0, size, size);
        // At depth 1 with a 90 degree fov the image spans [-1, 1] in x and y.
        const TriangleMesh q = quad({-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {9, 9, 9});
        const auto count = coverage(cam, q);
        CHECK(std::all_of(count.begin(), count.end(), [](int c) { return c == 1; }));
    }
}

TEST_CASE("triangles sharing edges never double-cover")
{
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const PinholeCamera cam = random_camera(rng, 48, 40);
        // Fan of triangles around a random center, closed ring: every interior
        // edge is shared by two triangles.
        TriangleMesh fan;
        const Vec3 c = rng.vec(-0.5, 0.5);
        fan.vertices.push_back(c);
        const int n = 3 + static_cast<int>(rng.below(8));
        const Vec3 axis_u = normalized(rng.vec(-1, 1));
        const Vec3 axis_v = normalized(cross(axis_u, rng.vec(-1, 1)));
        for (int i = 0; i < n; ++i) {
            const double a = 2 * pi * i / n;
            fan.vertices.push_back(c + axis_u * (rng.uniform(0.3, 1.5) * std::cos(a)) +
                                   axis_v * (rng.uniform(0.3, 1.5) * std::sin(a)));
        }
        for (int i = 0; i < n; ++i) {
            fan.triangles.push_back({0u, static_cast<std::uint32_t>(1 + i), static_cast<std::uint32_t>(1 + (i + 1) % n)});
        }
        const auto count = coverage(cam, fan);
        CHECK(*std::max_element(count.begin(), count.end()) <= 1);
    }
}

TEST_CASE("triangles crossing the near plane are clipped, not dropped")
{
    const PinholeCamera cam = axis_camera(90.0, 32, 32, 0.5, 10.0);
    // Floor from behind the camera to far in front.
    const TriangleMesh floor = quad({-5, -1, 3}, {5, -1, 3}, {5, -1, -8}, {-5, -1, -8}, {100, 100, 100});
    GeometryBuffers gb(32, 32);
    rasterize_mesh(gb, cam, floor);
    int covered = 0;
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) covered += gb.depth[y * 32 + x] < 1.0f ? 1 : 0;
    }
    CHECK(covered > 0);
    for (int x = 0; x < 32; ++x) CHECK(gb.depth[31 * 32 + x] < 1.0f);  // bottom row sees the floor
    CHECK(gb.depth[0] == 1.0f);                                          // top row sees nothing
}

TEST_CASE("resolve rule")
{
    GeometryBuffers gb(2, 1, {7, 7, 7});
    gb.depth = {0.5f, 0.5f};
    PackedFramebuffer fb(2, 1);
    CHECK(resolve(fb, gb).at(0, 0) == Rgb8{7, 7, 7});
    fb.merge_min(0, pack_cell(100, {1, 2, 3}));
    fb.merge_min(1, pack_cell(200, {4, 5, 6}));
    const RgbImage img = resolve(fb, gb);
    CHECK(img.at(0, 0) == Rgb8{1, 2, 3});
    CHECK(img.at(1, 0) == Rgb8{7, 7, 7});

    // Ties favour geometry.
    GeometryBuffers tie(1, 1, {7, 7, 7});
    tie.depth = {static_cast<float>(100.0 / 255.0)};
    PackedFramebuffer one(1, 1);
    one.merge_min(0, pack_cell(100, {1, 2, 3}));
    const float stored = tie.depth[0];
    CHECK(resolve(one, tie).at(0, 0) == (100.0 / 255.0 < stored ? Rgb8{1, 2, 3} : Rgb8{7, 7, 7}));

    Rng rng(12);
    GeometryBuffers random_gb(40, 30);
    for (std::size_t i = 0; i < random_gb.depth.size(); ++i) {
        random_gb.depth[i] = static_cast<float>(rng.uniform());
        random_gb.color[i] = rng.color();
    }
    CHECK(resolve(PackedFramebuffer(40, 30), random_gb).pixels ==
          test::oracle_resolve(std::vector<std::uint32_t>(1200, empty_cell), random_gb).pixels);
}

TEST_CASE("stereo")
{
    // Narrow fov so that a 64-row image still has f_px = 512.
    const PinholeCamera cam = axis_camera(rad_to_deg(2.0 * std::atan(32.0 / 512.0)), 256, 64, 0.1, 10.0);
    REQUIRE(cam.focal_px() == doctest::Approx(512.0));
    PointCloudFrame f;
    f.positions = {{0, 0, -2}};
    f.colors = {{255, 255, 255}};
    RenderScene scene;
    scene.points = &f;
    scene.meshes.push_back(quad({-9, -9, -9}, {9, -9, -9}, {9, 9, -9}, {-9, 9, -9}, {50, 60, 70}));

    const RgbImage same = render_stereo(scene, cam, 0.0);
    REQUIRE(same.width == 512);
    for (int y = 0; y < 64; ++y) {
        CHECK(std::equal(same.pixels.begin() + y * 512 * 3, same.pixels.begin() + y * 512 * 3 + 256 * 3,
                         same.pixels.begin() + y * 512 * 3 + 256 * 3));
    }

    double previous = 1e9;
    for (double depth : {1.0, 2.0, 4.0}) {
        f.positions = {{0, 0, static_cast<float>(-depth)}};
        const RgbImage img = render_stereo(scene, cam, 0.064);
        const auto [xl, yl] = find_color(img, 0, 256, {255, 255, 255});
        const auto [xr, yr] = find_color(img, 256, 512, {255, 255, 255});
        REQUIRE(xl >= 0);
        REQUIRE(xr >= 0);
        CHECK(yl == yr);
        const int disparity = xl - (xr - 256);
        const double expected = cam.focal_px() * 0.064 / depth;
        CHECK(std::abs(disparity - expected) <= 1.0);
        CHECK(disparity < previous);
        previous = disparity;
    }
}

TEST_CASE("hidden points leave only geometry")
{
    const PinholeCamera cam = axis_camera(90.0, 32, 32);
    RenderScene scene;
    scene.meshes.push_back(quad({-9, -9, -5}, {9, -9, -5}, {9, 9, -5}, {-9, 9, -5}, {50, 60, 70}));
    GeometryBuffers gb(32, 32);
    rasterize_mesh(gb, cam, scene.meshes[0]);
    const RgbImage img = render_mono(scene, cam);
    for (int i = 0; i < 32 * 32; ++i) CHECK(img.at(i % 32, i / 32) == gb.color[i]);
}

TEST_CASE("PPM output")
{
    RgbImage red(1, 1);
    red.set(0, 0, {255, 0, 0});
    const Bytes b = write_ppm(red);
    const std::string expected = std::string("P6\n1 1\n255\n") + "\xFF" + std::string(1, '\0') + std::string(1, '\0');
    CHECK(std::string(b.begin(), b.end()) == expected);

    RgbImage two(2, 1);
    two.set(0, 0, {1, 2, 3});
    two.set(1, 0, {4, 5, 6});
    const Bytes tb = write_ppm(two);
    CHECK(Bytes(tb.end() - 6, tb.end()) == Bytes{1, 2, 3, 4, 5, 6});

    Rng rng(13);
    RgbImage img(37, 11);
    for (auto& p : img.pixels) p = rng.byte();
    CHECK(test::oracle_read_ppm(write_ppm(img)) == img);
    CHECK(read_ppm(write_ppm(img)) == img);

    const std::string commented = "P6\n# comment\n2 1\n255\n" + std::string(6, 'a');
    CHECK(read_ppm(Bytes(commented.begin(), commented.end())).width == 2);
    const std::string p3 = "P3\n1 1\n255\n0 0 0\n";
    CHECK_THROWS_AS(read_ppm(Bytes(p3.begin(), p3.end())), FormatError);
    const std::string short_body = "P6\n2 1\n255\nabc";
    CHECK_THROWS_AS(read_ppm(Bytes(short_body.begin(), short_body.end())), FormatError);
}

TEST_CASE("OBJ parsing and writing")
{
    const TriangleMesh m = parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n"
                                     "f -4 -3 -2\no ignored\n",
                                     {1, 2, 3});
    CHECK(m.vertices.size() == 4);
    REQUIRE(m.triangles.size() == 3);
    CHECK(m.triangles[0] == std::array<std::uint32_t, 3>{0, 1, 2});
    CHECK(m.triangles[1] == std::array<std::uint32_t, 3>{0, 2, 3});
    CHECK(m.triangles[2] == std::array<std::uint32_t, 3>{0, 1, 2});
    CHECK(m.base_color == Rgb8{1, 2, 3});

    CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), FormatError);
    CHECK_THROWS_AS(parse_obj("v 0 0\n"), FormatError);
    CHECK_THROWS_AS(parse_obj("v 0 0 x\n"), FormatError);

    const TriangleMesh box = make_box({-1, -2, -3}, {1, 2, 3}, {4, 5, 6});
    CHECK(box.vertices.size() == 8);
    CHECK(box.triangles.size() == 12);
    const TriangleMesh back = parse_obj(write_obj(box), box.base_color);
    CHECK(back.vertices == box.vertices);
    CHECK(back.triangles == box.triangles);

    const TriangleMesh drill = make_drill_mesh(0.15, {});
    double max_z = -1;
    for (const Vec3& v : drill.vertices) max_z = std::max(max_z, v.z);
    CHECK(max_z == doctest::Approx(0.15));
    drill.check();
}
