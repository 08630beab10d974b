#include "moodkit/volcore/morphology.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace moodkit::volcore {

std::vector<Offset3> ball_offsets(int radius) {
    std::vector<Offset3> out;
    const int r2 = radius * radius;
    for (int dz = -radius; dz <= radius; ++dz)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx)
                if (dx * dx + dy * dy + dz * dz <= r2) out.push_back({dx, dy, dz});
    return out;
}

namespace {

bool on_surface(const BinaryMask3D& m, int x, int y, int z) {
    const Dims& d = m.dims();
    constexpr int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& o : nb) {
        const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
        if (!d.contains(xx, yy, zz) || !m(xx, yy, zz)) return true;
    }
    return false;
}

BinaryMask3D invert(const BinaryMask3D& m) {
    BinaryMask3D out(m.dims());
    for (std::size_t i = 0; i < m.size(); ++i) out.set(i, !m[i]);
    return out;
}

// Running min (erode) or max (dilate) of a 0/1 line over the window [i - before, i + after].
// Outside the line the value is `outside`.
void sweep_line(std::vector<std::uint8_t>& line, int before, int after, bool take_max, std::uint8_t outside) {
    const int n = static_cast<int>(line.size());
    std::vector<std::uint8_t> src = line;
    // prefix counts of ones make each window an O(1) query
    std::vector<int> ones(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) ones[static_cast<std::size_t>(i) + 1] = ones[static_cast<std::size_t>(i)] + src[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) {
        const int lo = i - before;
        const int hi = i + after;
        const int clo = std::max(lo, 0);
        const int chi = std::min(hi, n - 1);
        const int inside = chi - clo + 1;
        const int cnt = ones[static_cast<std::size_t>(chi) + 1] - ones[static_cast<std::size_t>(clo)];
        const bool spills = lo < 0 || hi > n - 1;
        bool v = false;
        if (take_max)
            v = cnt > 0 || (spills && outside != 0);
        else
            v = cnt == inside && (!spills || outside != 0);
        line[static_cast<std::size_t>(i)] = v ? 1 : 0;
    }
}

BinaryMask3D separable_cube(const BinaryMask3D& m, int before, int after, bool take_max, std::uint8_t outside) {
    BinaryMask3D out = m;
    const Dims d = m.dims();
    auto bytes = out.bytes();
    std::vector<std::uint8_t> line;
    for (int axis = 0; axis < 3; ++axis) {
        const int n = d[axis];
        line.resize(static_cast<std::size_t>(n));
        const int a1 = axis == 0 ? 1 : 0;
        const int a2 = axis == 2 ? 1 : 2;
        for (int j = 0; j < d[a2]; ++j) {
            for (int k = 0; k < d[a1]; ++k) {
                auto at = [&](int i) {
                    int c[3];
                    c[axis] = i;
                    c[a1] = k;
                    c[a2] = j;
                    return d.index(c[0], c[1], c[2]);
                };
                for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = bytes[at(i)];
                sweep_line(line, before, after, take_max, outside);
                for (int i = 0; i < n; ++i) bytes[at(i)] = line[static_cast<std::size_t>(i)];
            }
        }
    }
    return out;
}

} // namespace

BinaryMask3D dilate_ball(const BinaryMask3D& m, int radius) {
    if (radius < 0) throw std::invalid_argument("dilate_ball: negative radius");
    if (radius == 0) return m;
    const auto ball = ball_offsets(radius);
    const Dims& d = m.dims();
    BinaryMask3D out = m;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                // interior voxels stamp nothing the surface voxels do not already cover
                if (!m(x, y, z) || !on_surface(m, x, y, z)) continue;
                for (const auto& o : ball) {
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (d.contains(xx, yy, zz)) out.set(xx, yy, zz, true);
                }
            }
    return out;
}

BinaryMask3D erode_ball(const BinaryMask3D& m, int radius) {
    if (radius < 0) throw std::invalid_argument("erode_ball: negative radius");
    if (radius == 0) return m;
    // Background outside the grid is treated as foreground for erosion, which is
    // exactly background-outside for the dilation of the complement.
    return invert(dilate_ball(invert(m), radius));
}

BinaryMask3D close_ball(const BinaryMask3D& m, int radius) {
    return erode_ball(dilate_ball(m, radius), radius);
}

BinaryMask3D erode_cube(const BinaryMask3D& m, int edge) {
    if (edge < 1) throw std::invalid_argument("erode_cube: edge must be >= 1");
    return separable_cube(m, edge / 2, edge - 1 - edge / 2, false, 1);
}

BinaryMask3D dilate_cube(const BinaryMask3D& m, int edge) {
    if (edge < 1) throw std::invalid_argument("dilate_cube: edge must be >= 1");
    return separable_cube(m, edge - 1 - edge / 2, edge / 2, true, 0);
}

BinaryMask3D open_cube(const BinaryMask3D& m, int edge) {
    // Opening must not grow from the border, so erosion here sees background outside.
    if (edge < 1) throw std::invalid_argument("open_cube: edge must be >= 1");
    const auto eroded = separable_cube(m, edge / 2, edge - 1 - edge / 2, false, 0);
    return dilate_cube(eroded, edge);
}

Components label_components(const BinaryMask3D& m) {
    const Dims& d = m.dims();
    Components c;
    c.labels.assign(m.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < m.size(); ++seed) {
        if (!m[seed] || c.labels[seed] != 0) continue;
        const int label = static_cast<int>(c.sizes.size()) + 1;
        std::size_t size = 0;
        stack.push_back(seed);
        c.labels[seed] = label;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(i % static_cast<std::size_t>(d.nx));
            const int y = static_cast<int>((i / static_cast<std::size_t>(d.nx)) % static_cast<std::size_t>(d.ny));
            const int z = static_cast<int>(i / (static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny)));
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = x + dx, yy = y + dy, zz = z + dz;
                        if (!d.contains(xx, yy, zz)) continue;
                        const std::size_t j = d.index(xx, yy, zz);
                        if (m[j] && c.labels[j] == 0) {
                            c.labels[j] = label;
                            stack.push_back(j);
                        }
                    }
        }
        c.sizes.push_back(size);
    }
    return c;
}

BinaryMask3D largest_component(const BinaryMask3D& m) {
    const auto c = label_components(m);
    BinaryMask3D out(m.dims());
    if (c.sizes.empty()) return out;
    const auto best = static_cast<int>(std::max_element(c.sizes.begin(), c.sizes.end()) - c.sizes.begin()) + 1;
    for (std::size_t i = 0; i < m.size(); ++i) out.set(i, c.labels[i] == best);
    return out;
}

BinaryMask3D fill_holes(const BinaryMask3D& m) {
    const Dims& d = m.dims();
    std::vector<std::uint8_t> outside(m.size(), 0);
    std::deque<std::size_t> queue;
    auto visit = [&](int x, int y, int z) {
        const std::size_t i = d.index(x, y, z);
        if (!m[i] && !outside[i]) {
            outside[i] = 1;
            queue.push_back(i);
        }
    };
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
                if (x == 0 || y == 0 || z == 0 || x == d.nx - 1 || y == d.ny - 1 || z == d.nz - 1) visit(x, y, z);
    constexpr int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        const int x = static_cast<int>(i % static_cast<std::size_t>(d.nx));
        const int y = static_cast<int>((i / static_cast<std::size_t>(d.nx)) % static_cast<std::size_t>(d.ny));
        const int z = static_cast<int>(i / (static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny)));
        for (const auto& o : nb) {
            const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
            if (d.contains(xx, yy, zz)) visit(xx, yy, zz);
        }
    }
    BinaryMask3D out(d);
    for (std::size_t i = 0; i < m.size(); ++i) out.set(i, m[i] || !outside[i]);
    return out;
}

} // namespace moodkit::volcore
