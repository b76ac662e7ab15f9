// Python surface over the core library: models, attack spectra, transfer
// metrics, synthetic data, and the verification suites. Arrays cross the
// boundary as copies; shapes follow the C++ conventions (inputs are rows).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "xferlab/attacks.hpp"
#include "xferlab/harness.hpp"
#include "xferlab/rng.hpp"
#include "xferlab/synthdata.hpp"
#include "xferlab/transfer.hpp"

namespace py = pybind11;
using namespace xferlab;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& arr, const char* what) {
    if (arr.ndim() != 2) throw InvalidInput(std::string(what) + " must be a 2-d array");
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::memcpy(m.data(), arr.data(), sizeof(double) * m.size());
    return m;
}

Vector to_vector(const DoubleArray& arr, const char* what) {
    if (arr.ndim() != 1) throw InvalidInput(std::string(what) + " must be a 1-d array");
    Vector v(static_cast<std::size_t>(arr.shape(0)));
    std::memcpy(v.data(), arr.data(), sizeof(double) * v.size());
    return v;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> out({static_cast<py::ssize_t>(m.rows()),
                             static_cast<py::ssize_t>(m.cols())});
    std::memcpy(out.mutable_data(), m.data(), sizeof(double) * m.size());
    return out;
}

py::array_t<double> from_vector(const Vector& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::memcpy(out.mutable_data(), v.data(), sizeof(double) * v.size());
    return out;
}

MetricSpace metric_or_identity(const py::object& h, std::size_t dim) {
    if (h.is_none()) return MetricSpace::identity(dim);
    return MetricSpace::from_psd(to_matrix(h.cast<DoubleArray>(), "metric"));
}

Dataset inputs_only(const DoubleArray& x) { return Dataset(to_matrix(x, "x"), Matrix()); }

Dataset labeled(const DoubleArray& x, const DoubleArray& y) {
    return Dataset(to_matrix(x, "x"), to_matrix(y, "y"));
}

py::dict report_dict(const TransferReport& r) {
    py::dict d;
    d["alpha1"] = r.alpha1;
    d["alpha2"] = r.alpha2;
    d["alpha1x2"] = r.alpha1x2;
    d["grad_match"] = r.grad_match;
    d["func_match"] = r.func_match;
    d["knowledge_dist"] = r.knowledge_dist;
    d["direction"] = r.direction;
    d["rows"] = r.rows;
    d["order"] = r.order;
    return d;
}

}  // namespace

PYBIND11_MODULE(xferlab, m) {
    m.doc() = "transfer metrics for adversarial attacks between models";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidInput& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const Error& e) {
            PyErr_SetString(PyExc_RuntimeError, e.what());
        }
    });

    py::class_<MlpOneHidden>(m, "Mlp", "one hidden sigmoid layer, linear output")
        .def(py::init([](const DoubleArray& w1, const DoubleArray& b1, const DoubleArray& w2,
                         const DoubleArray& b2) {
                 return MlpOneHidden(to_matrix(w1, "w1"), to_vector(b1, "b1"),
                                     to_matrix(w2, "w2"), to_vector(b2, "b2"));
             }),
             py::arg("w1"), py::arg("b1"), py::arg("w2"), py::arg("b2"))
        .def_static(
            "random",
            [](std::size_t n, std::size_t h, std::size_t mm, std::uint64_t seed) {
                return MlpOneHidden::random(n, h, mm, seed);
            },
            py::arg("n"), py::arg("hidden"), py::arg("m"), py::arg("seed"))
        .def_property_readonly("in_dim", &MlpOneHidden::in_dim)
        .def_property_readonly("out_dim", &MlpOneHidden::out_dim)
        .def_property_readonly("hidden_dim", &MlpOneHidden::hidden_dim)
        .def("forward",
             [](const MlpOneHidden& f, const DoubleArray& x) {
                 return from_vector(f.forward(to_vector(x, "x")));
             },
             py::arg("x"))
        .def("jacobian",
             [](const MlpOneHidden& f, const DoubleArray& x) {
                 return from_matrix(f.jacobian(to_vector(x, "x")));
             },
             py::arg("x"))
        .def("to_json", &MlpOneHidden::to_json)
        .def_static("from_json", &MlpOneHidden::from_json, py::arg("text"));

    m.def(
        "train_mlp",
        [](const DoubleArray& x, const DoubleArray& y, std::size_t width, double lr,
           std::size_t epochs, std::uint64_t seed) {
            Dataset data = labeled(x, y);
            TrainResult r =
                train_from_seed(data.in_dim(), width, data.target_dim(), data, lr, epochs, seed);
            return py::make_tuple(r.model, from_vector(r.losses));
        },
        py::arg("x"), py::arg("y"), py::arg("width") = 100, py::arg("lr") = 0.5,
        py::arg("epochs") = 2000, py::arg("seed") = 202,
        "full-batch gradient descent; returns (model, loss history)");

    m.def(
        "perturb",
        [](const MlpOneHidden& f, double t, std::uint64_t seed) {
            return perturb_weights(f, t, seed);
        },
        py::arg("model"), py::arg("t"), py::arg("seed"),
        "adds t times a seeded uniform direction to every weight block");

    m.def(
        "alpha1",
        [](const MlpOneHidden& f1, const MlpOneHidden& f2, const DoubleArray& x,
           const py::object& h1, const py::object& h2, std::size_t order) {
            return alpha1_small_eps(f1, metric_or_identity(h1, f1.out_dim()), f2,
                                    metric_or_identity(h2, f2.out_dim()), inputs_only(x), order);
        },
        py::arg("f1"), py::arg("f2"), py::arg("x"), py::arg("h1") = py::none(),
        py::arg("h2") = py::none(), py::arg("order") = 1,
        "small-perturbation transfer ratio of f1's order-th attack onto f2");

    m.def(
        "alpha1_finite",
        [](const MlpOneHidden& f1, const MlpOneHidden& f2, const DoubleArray& x, double eps,
           const py::object& h1, const py::object& h2, std::size_t steps, double step_size,
           std::uint64_t seed) {
            FiniteEpsAlpha1 r =
                alpha1_finite_eps(f1, metric_or_identity(h1, f1.out_dim()), f2,
                                  metric_or_identity(h2, f2.out_dim()), inputs_only(x), eps,
                                  steps, step_size, seed);
            return py::make_tuple(r.value, r.clipped);
        },
        py::arg("f1"), py::arg("f2"), py::arg("x"), py::arg("eps"), py::arg("h1") = py::none(),
        py::arg("h2") = py::none(), py::arg("steps") = 50, py::arg("step_size") = 0.0,
        py::arg("seed") = 404, "finite-radius ratio via ascent attacks; returns (value, clipped)");

    m.def(
        "alpha2",
        [](const MlpOneHidden& f1, const MlpOneHidden& f2, const DoubleArray& x,
           const py::object& h1, const py::object& h2, std::size_t order) {
            return alpha2(f1, metric_or_identity(h1, f1.out_dim()), f2,
                          metric_or_identity(h2, f2.out_dim()), inputs_only(x), order);
        },
        py::arg("f1"), py::arg("f2"), py::arg("x"), py::arg("h1") = py::none(),
        py::arg("h2") = py::none(), py::arg("order") = 1,
        "norm of the mean outer product of unit output deviations");

    m.def(
        "alpha2_pairwise",
        [](const MlpOneHidden& f1, const MlpOneHidden& f2, const DoubleArray& x,
           const py::object& h1, const py::object& h2, std::size_t order) {
            return alpha2_pairwise(f1, metric_or_identity(h1, f1.out_dim()), f2,
                                   metric_or_identity(h2, f2.out_dim()), inputs_only(x), order);
        },
        py::arg("f1"), py::arg("f2"), py::arg("x"), py::arg("h1") = py::none(),
        py::arg("h2") = py::none(), py::arg("order") = 1);

    m.def(
        "alpha1_alpha2",
        [](const MlpOneHidden& f1, const MlpOneHidden& f2, const DoubleArray& x,
           const py::object& h1, const py::object& h2, std::size_t order) {
            return alpha1_alpha2(f1, metric_or_identity(h1, f1.out_dim()), f2,
                                 metric_or_identity(h2, f2.out_dim()), inputs_only(x), order);
        },
        py::arg("f1"), py::arg("f2"), py::arg("x"), py::arg("h1") = py::none(),
        py::arg("h2") = py::none(), py::arg("order") = 1);

    m.def(
        "grad_match",
        [](const MlpOneHidden& f_star, const MlpOneHidden& f_dia, const DoubleArray& x,
           const py::object& h_star) {
            return grad_match_residual(f_star, f_dia, metric_or_identity(h_star, f_star.out_dim()),
                                       inputs_only(x));
        },
        py::arg("f_star"), py::arg("f_dia"), py::arg("x"), py::arg("h_star") = py::none(),
        "best-affine gradient matching distance (residual form)");

    m.def(
        "grad_match_spectral",
        [](const MlpOneHidden& f_star, const MlpOneHidden& f_dia, const DoubleArray& x,
           const py::object& h_star, const py::object& h_dia) {
            SpectralGradMatch g = grad_match_spectral(
                f_star, metric_or_identity(h_star, f_star.out_dim()), f_dia,
                metric_or_identity(h_dia, f_dia.out_dim()), inputs_only(x));
            py::dict d;
            d["value"] = g.value;
            d["fraction"] = g.fraction;
            d["cross_term"] = g.cross_term;
            d["grad_norm_sq"] = g.grad_norm_sq;
            d["j_pinv_norm"] = g.j_pinv_norm;
            return d;
        },
        py::arg("f_star"), py::arg("f_dia"), py::arg("x"), py::arg("h_star") = py::none(),
        py::arg("h_dia") = py::none(),
        "gradient matching distance rebuilt from attack spectra");

    m.def(
        "func_match",
        [](const MlpOneHidden& f_star, const MlpOneHidden& f_dia, const DoubleArray& x,
           const py::object& h_star) {
            return func_match(f_star, f_dia, metric_or_identity(h_star, f_star.out_dim()),
                              inputs_only(x));
        },
        py::arg("f_star"), py::arg("f_dia"), py::arg("x"), py::arg("h_star") = py::none(),
        "best-affine output matching distance");

    m.def(
        "knowledge_dist",
        [](const MlpOneHidden& f_src, const DoubleArray& x, const DoubleArray& y,
           const py::object& h_tgt) {
            Dataset data = labeled(x, y);
            return knowledge_dist(f_src, metric_or_identity(h_tgt, data.target_dim()), data);
        },
        py::arg("f_src"), py::arg("x"), py::arg("y"), py::arg("h_tgt") = py::none(),
        "best-affine distance from probed features to the labels");

    m.def(
        "surrogate_bound",
        [](const MlpOneHidden& f_src, const MlpOneHidden& f_tgt, const DoubleArray& x,
           const DoubleArray& y, const py::object& h_tgt) {
            Dataset data = labeled(x, y);
            SurrogateBound b = surrogate_transfer_bound(
                f_src, f_tgt, metric_or_identity(h_tgt, f_tgt.out_dim()), data);
            py::dict d;
            d["knowledge"] = b.knowledge;
            d["func"] = b.func;
            d["budget"] = b.budget;
            d["holds"] = b.holds;
            return d;
        },
        py::arg("f_src"), py::arg("f_tgt"), py::arg("x"), py::arg("y"),
        py::arg("h_tgt") = py::none());

    m.def(
        "attack_spectrum",
        [](const MlpOneHidden& f, const DoubleArray& x, const py::object& h) {
            AttackSpectrum s =
                attack_spectrum(f, metric_or_identity(h, f.out_dim()), to_vector(x, "x"));
            return py::make_tuple(from_vector(s.sigma), from_matrix(s.deltas));
        },
        py::arg("f"), py::arg("x"), py::arg("h") = py::none(),
        "singular values and unit attack directions at one input");

    m.def(
        "pgd_attack",
        [](const MlpOneHidden& f, const DoubleArray& x, double eps, const py::object& h,
           std::size_t steps, double step_size, std::uint64_t seed) {
            return from_vector(pgd_attack(f, metric_or_identity(h, f.out_dim()),
                                          to_vector(x, "x"), eps, steps, step_size, seed));
        },
        py::arg("f"), py::arg("x"), py::arg("eps"), py::arg("h") = py::none(),
        py::arg("steps") = 50, py::arg("step_size") = 0.0, py::arg("seed") = 404,
        "ascent attack on the eps-sphere; returns the perturbation");

    m.def(
        "compute_report",
        [](const MlpOneHidden& f1, const MlpOneHidden& f2, const DoubleArray& x,
           const py::object& y, const py::object& h1, const py::object& h2,
           const std::string& direction, std::size_t order) {
            Dataset data = y.is_none() ? inputs_only(x) : labeled(x, y.cast<DoubleArray>());
            return report_dict(compute_report(f1, metric_or_identity(h1, f1.out_dim()), f2,
                                              metric_or_identity(h2, f2.out_dim()), data,
                                              direction, order));
        },
        py::arg("f1"), py::arg("f2"), py::arg("x"), py::arg("y") = py::none(),
        py::arg("h1") = py::none(), py::arg("h2") = py::none(), py::arg("direction") = "ts",
        py::arg("order") = 1, "all transfer metrics for one attack direction");

    m.def(
        "make_dataset",
        [](std::size_t n, std::size_t rbf_count, std::size_t d, std::size_t mixture_k,
           std::size_t count, std::uint64_t seed, double sigma_sq_floor) {
            RbfTarget target =
                make_target(n, rbf_count, d, Rng::mix(seed, 1), sigma_sq_floor);
            MixtureSpec mixture = make_mixture(mixture_k, n, Rng::mix(seed, 2));
            Dataset data = sample_dataset(target, mixture, count, Rng::mix(seed, 3));
            return py::make_tuple(from_matrix(data.x()), from_matrix(data.y()));
        },
        py::arg("n") = 50, py::arg("rbf_count") = 100, py::arg("d") = 10,
        py::arg("mixture_k") = 10, py::arg("count") = 5000, py::arg("seed") = 101,
        py::arg("sigma_sq_floor") = 1e-3,
        "synthetic mixture inputs with radial-feature targets; returns (x, y)");

    m.def(
        "run_verify",
        [](const std::string& only, std::size_t trials, std::uint64_t seed) {
            VerifyOptions opts;
            opts.only = only;
            opts.trials = trials;
            VerifyReport report = run_verify(opts, seed);
            py::list suites;
            for (const SuiteResult& s : report.suites) {
                py::dict d;
                d["name"] = s.name;
                d["trials"] = s.trials;
                d["failures"] = s.failures;
                d["passed"] = s.passed;
                d["notes"] = s.notes;
                suites.append(d);
            }
            py::dict out;
            out["ok"] = report.ok;
            out["suites"] = suites;
            return out;
        },
        py::arg("only") = "", py::arg("trials") = 0, py::arg("seed") = 505,
        "identity and bound suites; returns {ok, suites}");

    m.def(
        "spearman",
        [](const DoubleArray& a, const DoubleArray& b) {
            return spearman(to_vector(a, "a"), to_vector(b, "b"));
        },
        py::arg("a"), py::arg("b"), "rank correlation with mean-rank ties");
}
