#include "koblab/tabulated.hpp"

#include <cmath>
#include <memory>

#include "koblab/errors.hpp"

namespace koblab {

namespace {

struct Table {
    int n = 0;       // components = n*n
    int side = 0;    // lattice points per axis
    double lo = 0.0; // first lattice coordinate
    double spacing = 0.0;
    std::vector<double> values; // [(j*side + i) * n*n + comp]

    double sample(int i, int j, int comp) const {
        return values[(static_cast<std::size_t>(j) * side + i) * n * n + comp];
    }
};

inline void catmull_rom(double t, double* w, double* dw) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
    dw[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0);
    dw[1] = 0.5 * (9.0 * t2 - 10.0 * t);
    dw[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0);
    dw[3] = 0.5 * (3.0 * t2 - 2.0 * t);
}

// evaluates the interpolant and, when dg != nullptr, its gradient
void eval_table(const Table& tab, const double* x, double* g, double* dg) {
    const double fx = (x[0] - tab.lo) / tab.spacing;
    const double fy = (x[1] - tab.lo) / tab.spacing;
    int i = static_cast<int>(std::floor(fx));
    int j = static_cast<int>(std::floor(fy));
    i = std::max(1, std::min(tab.side - 3, i));
    j = std::max(1, std::min(tab.side - 3, j));
    const double tx = fx - i, ty = fy - j;
    double wx[4], dwx[4], wy[4], dwy[4];
    catmull_rom(tx, wx, dwx);
    catmull_rom(ty, wy, dwy);
    const int nn = tab.n * tab.n;
    for (int comp = 0; comp < nn; ++comp) {
        double v = 0.0, vx = 0.0, vy = 0.0;
        for (int b = 0; b < 4; ++b) {
            double row = 0.0, drow = 0.0;
            for (int a = 0; a < 4; ++a) {
                const double s = tab.sample(i - 1 + a, j - 1 + b, comp);
                row += wx[a] * s;
                drow += dwx[a] * s;
            }
            v += wy[b] * row;
            vx += wy[b] * drow;
            vy += dwy[b] * row;
        }
        g[comp] = v;
        if (dg) {
            dg[comp] = vx / tab.spacing;           // d_x g
            dg[nn + comp] = vy / tab.spacing;      // d_y g
        }
    }
    // keep the form exactly symmetric
    const double s01 = 0.5 * (g[1] + g[2]);
    g[1] = s01;
    g[2] = s01;
    if (dg) {
        for (int k = 0; k < 2; ++k) {
            const double d01 = 0.5 * (dg[k * nn + 1] + dg[k * nn + 2]);
            dg[k * nn + 1] = d01;
            dg[k * nn + 2] = d01;
        }
    }
}

} // namespace

ChartedMetric tabulate_metric(const ChartedMetric& src, double halfwidth, double spacing) {
    if (src.dim != 2) throw PreconditionFailed("tabulate_metric supports dim 2 charts only");
    auto tab = std::make_shared<Table>();
    tab->n = 2;
    tab->spacing = spacing;
    tab->side = 2 * static_cast<int>(std::ceil(halfwidth / spacing)) + 3; // one ghost ring
    tab->lo = -0.5 * (tab->side - 1) * spacing;
    tab->values.resize(static_cast<std::size_t>(tab->side) * tab->side * 4);
    Vec x(2);
    for (int j = 0; j < tab->side; ++j)
        for (int i = 0; i < tab->side; ++i) {
            x[0] = tab->lo + i * spacing;
            x[1] = tab->lo + j * spacing;
            const Mat gx = src.g(x);
            for (int comp = 0; comp < 4; ++comp)
                tab->values[(static_cast<std::size_t>(j) * tab->side + i) * 4 + comp] =
                    gx.a[static_cast<std::size_t>(comp)];
        }

    ChartedMetric out;
    out.dim = 2;
    out.name = src.name + "_tab";
    const double usable = -tab->lo - 1.5 * spacing;
    out.domain = Domain::ball({0.0, 0.0}, std::min(usable, halfwidth));
    out.raw_g = [tab](const double* xq, double* g) { eval_table(*tab, xq, g, nullptr); };
    out.raw_dg = [tab](const double* xq, double* dg) {
        double g[4];
        eval_table(*tab, xq, g, dg);
    };
    RawMetricFn rg = out.raw_g;
    RawDerivFn rdg = out.raw_dg;
    out.g = [rg](const Vec& xq) {
        Mat g(2);
        rg(xq.data(), g.a.data());
        return g;
    };
    out.dg = [rdg](const Vec& xq) {
        double buf[8];
        rdg(xq.data(), buf);
        std::vector<Mat> d(2, Mat(2));
        for (int k = 0; k < 2; ++k)
            for (int c = 0; c < 4; ++c) d[k].a[static_cast<std::size_t>(c)] = buf[k * 4 + c];
        return d;
    };
    return out;
}

} // namespace koblab
