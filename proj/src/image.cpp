#include <threadtrack/image.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace threadtrack {

int Mask::count_on() const {
    int n = 0;
    for (std::uint8_t value : values_)
        if (value >= 128) ++n;
    return n;
}

std::vector<std::int32_t> label_components(const Mask& mask,
                                           std::vector<int>* areas) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<std::int32_t> labels(static_cast<std::size_t>(w) * h, -1);
    if (areas) areas->clear();

    std::vector<Pixel> stack;
    std::int32_t next = 0;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const std::size_t idx = static_cast<std::size_t>(v) * w + u;
            if (!mask.on(u, v) || labels[idx] >= 0) continue;

            int area = 0;
            labels[idx] = next;
            stack.push_back({u, v});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                ++area;
                for (int dv = -1; dv <= 1; ++dv) {
                    for (int du = -1; du <= 1; ++du) {
                        if (du == 0 && dv == 0) continue;
                        const int nu = p.u + du;
                        const int nv = p.v + dv;
                        if (!mask.in_bounds(nu, nv)) continue;
                        const std::size_t nidx =
                            static_cast<std::size_t>(nv) * w + nu;
                        if (mask.on(nu, nv) && labels[nidx] < 0) {
                            labels[nidx] = next;
                            stack.push_back({nu, nv});
                        }
                    }
                }
            }
            if (areas) areas->push_back(area);
            ++next;
        }
    }
    return labels;
}

Mask remove_small_components(const Mask& mask, int min_area) {
    std::vector<int> areas;
    const auto labels = label_components(mask, &areas);
    Mask out = mask;
    const int w = mask.width();
    for (int v = 0; v < mask.height(); ++v) {
        for (int u = 0; u < w; ++u) {
            const std::int32_t l = labels[static_cast<std::size_t>(v) * w + u];
            if (l >= 0 && areas[l] < min_area) out.at(u, v) = 0;
        }
    }
    return out;
}

Pixel FeatureTransform::nearest_pixel(double u, double v) const {
    const int cu = std::clamp(static_cast<int>(std::lround(u)), 0, width - 1);
    const int cv = std::clamp(static_cast<int>(std::lround(v)), 0, height - 1);
    const std::int32_t packed = nearest[static_cast<std::size_t>(cv) * width + cu];
    return {packed % width, packed / width};
}

double FeatureTransform::distance(double u, double v) const {
    const Pixel p = nearest_pixel(u, v);
    return std::hypot(p.u - u, p.v - v);
}

// Two-pass exact Euclidean distance transform (column scan for nearest row,
// then a lower-envelope-of-parabolas pass along every row), extended to carry
// the argmin through both passes so callers get the nearest pixel itself.
FeatureTransform feature_transform(const Mask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    constexpr double kInf = std::numeric_limits<double>::infinity();

    FeatureTransform ft;
    ft.width = w;
    ft.height = h;
    ft.nearest.assign(static_cast<std::size_t>(w) * h, -1);

    // Pass 1: per column, squared distance to the nearest on-pixel in that
    // column plus the row it sits in.
    std::vector<double> col_d2(static_cast<std::size_t>(w) * h, kInf);
    std::vector<std::int32_t> col_row(static_cast<std::size_t>(w) * h, -1);
    bool any = false;
    for (int u = 0; u < w; ++u) {
        int last = -1;
        for (int v = 0; v < h; ++v) {
            if (mask.on(u, v)) {
                last = v;
                any = true;
            }
            if (last >= 0) {
                const std::size_t idx = static_cast<std::size_t>(v) * w + u;
                const double d = v - last;
                col_d2[idx] = d * d;
                col_row[idx] = last;
            }
        }
        last = -1;
        for (int v = h - 1; v >= 0; --v) {
            if (mask.on(u, v)) last = v;
            if (last >= 0) {
                const std::size_t idx = static_cast<std::size_t>(v) * w + u;
                const double d = last - v;
                if (d * d < col_d2[idx]) {
                    col_d2[idx] = d * d;
                    col_row[idx] = last;
                }
            }
        }
    }
    if (!any) return ft;
    ft.empty = false;

    // Pass 2: per row, minimise col_d2[x'] + (x - x')^2 over source columns x'
    // with the standard parabola envelope; v[] keeps the source column.
    std::vector<int> env(w);
    std::vector<double> z(w + 1);
    for (int row = 0; row < h; ++row) {
        const std::size_t base = static_cast<std::size_t>(row) * w;
        int k = -1;
        for (int q = 0; q < w; ++q) {
            const double fq = col_d2[base + q];
            if (fq == kInf) continue;
            double s;
            while (k >= 0) {
                const int p = env[k];
                s = (fq + q * q - (col_d2[base + p] + p * p)) / (2.0 * (q - p));
                if (s <= z[k]) {
                    --k;
                } else {
                    break;
                }
            }
            if (k < 0) {
                k = 0;
                env[0] = q;
                z[0] = -kInf;
                z[1] = kInf;
            } else {
                ++k;
                env[k] = q;
                z[k] = s;
                z[k + 1] = kInf;
            }
        }
        if (k < 0) continue;  // row has no finite column (cannot happen if any)
        int j = 0;
        for (int q = 0; q < w; ++q) {
            while (z[j + 1] < q) ++j;
            const int src = env[j];
            ft.nearest[base + q] =
                col_row[base + src] * static_cast<std::int32_t>(w) + src;
        }
    }
    return ft;
}

void write_pgm(const Mask& mask, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.data().data()),
              static_cast<std::streamsize>(mask.data().size()));
    if (!out) throw Error("failed writing " + path.string());
}

namespace {

int next_pnm_int(std::istream& in) {
    // Skips whitespace and '#' comments between header fields.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    int value = 0;
    bool got = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        got = true;
        c = in.get();
    }
    if (!got) throw Error("malformed PNM header");
    return value;
}

}  // namespace

Mask read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5')
        throw Error(path.string() + " is not a binary PGM");
    const int w = next_pnm_int(in);
    const int h = next_pnm_int(in);
    const int maxval = next_pnm_int(in);
    if (maxval != 255) throw Error("unsupported PGM maxval");
    Mask mask(w, h);
    in.read(reinterpret_cast<char*>(mask.data().data()),
            static_cast<std::streamsize>(mask.data().size()));
    if (!in) throw Error("truncated PGM " + path.string());
    return mask;
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<std::streamsize>(image.rgb.size()));
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace threadtrack
