#include "vrg/autodiff.hpp"

#include <cmath>
#include <utility>

#include "vrg/errors.hpp"

namespace vrg {

namespace {

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 tensor, got shape " +
                             shape_to_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
}

// out(i,j) = sum_m a(m,i) * g(m,j), i.e. a^T . g
Tensor matmul_tn(const Tensor& a, const Tensor& g) {
    const std::size_t m = a.dim(0), k = a.dim(1), n = g.dim(1);
    Tensor out({k, n});
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            const double ari = a(r, i);
            if (ari == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += ari * g(r, j);
            }
        }
    }
    return out;
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) +
                             " . " + shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += aip * b(p, j);
            }
        }
    }
    require_finite(out, "matmul");
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_nt");
    require_rank2(b, "matmul_nt");
    if (a.dim(1) != b.dim(1)) {
        throw DimensionError("matmul_nt: inner dimensions disagree, " + shape_to_string(a.shape()) +
                             " . " + shape_to_string(b.shape()) + "^T");
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(j, p);
            out(i, j) = acc;
        }
    }
    require_finite(out, "matmul_nt");
    return out;
}

Tensor elu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        out[i] = v >= 0.0 ? v : std::expm1(v);
    }
    require_finite(out, "elu");
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
    require_finite(out, "relu");
    return out;
}

Tensor activation(Activation kind, const Tensor& x) {
    return kind == Activation::elu ? elu(x) : relu(x);
}

Tensor l2_normalize_rows(const Tensor& x) {
    require_rank2(x, "l2_normalize_rows");
    const std::size_t r = x.dim(0), c = x.dim(1);
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < c; ++j) sq += x(i, j) * x(i, j);
        const double norm = std::sqrt(sq);
        if (norm == 0.0) {
            throw DataError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
        }
        for (std::size_t j = 0; j < c; ++j) out(i, j) = x(i, j) / norm;
    }
    require_finite(out, "l2_normalize_rows");
    return out;
}

Tape::ValueId Tape::push(Tensor value, std::function<void(Tape&, const Tensor& g)> back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
    return static_cast<ValueId>(nodes_.size() - 1);
}

void Tape::accumulate(ValueId id, const Tensor& delta) {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

Tape::ValueId Tape::leaf(Tensor value) {
    require_finite(value, "leaf");
    return push(std::move(value), nullptr);
}

Tape::ValueId Tape::param(Param& p) {
    require_finite(p.value, "param " + p.name);
    ValueId id = push(p.value, nullptr);
    params_.emplace_back(id, &p);
    return id;
}

Tape::ValueId Tape::matmul(ValueId a, ValueId b) {
    Tensor out = vrg::matmul(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, vrg::matmul_nt(g, t.value(b))); // dA = G . B^T
        t.accumulate(b, matmul_tn(t.value(a), g));      // dB = A^T . G
    });
}

Tape::ValueId Tape::matmul_nt(ValueId a, ValueId b) {
    Tensor out = vrg::matmul_nt(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, vrg::matmul(g, t.value(b))); // dA = G . B
        t.accumulate(b, matmul_tn(g, t.value(a)));   // dB = G^T . A
    });
}

Tape::ValueId Tape::add(ValueId a, ValueId b) {
    require_same_shape(value(a), value(b), "add");
    Tensor out(value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(a)[i] + value(b)[i];
    require_finite(out, "add");
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Tape::ValueId Tape::sub(ValueId a, ValueId b) {
    require_same_shape(value(a), value(b), "sub");
    Tensor out(value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(a)[i] - value(b)[i];
    require_finite(out, "sub");
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        Tensor neg(g.shape());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -g[i];
        t.accumulate(b, neg);
    });
}

Tape::ValueId Tape::mul(ValueId a, ValueId b) {
    require_same_shape(value(a), value(b), "mul");
    Tensor out(value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(a)[i] * value(b)[i];
    require_finite(out, "mul");
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        Tensor da(g.shape()), db(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] = g[i] * t.value(b)[i];
            db[i] = g[i] * t.value(a)[i];
        }
        t.accumulate(a, da);
        t.accumulate(b, db);
    });
}

Tape::ValueId Tape::scale(ValueId a, double c) {
    Tensor out(value(a).shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * value(a)[i];
    require_finite(out, "scale");
    return push(std::move(out), [a, c](Tape& t, const Tensor& g) {
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = c * g[i];
        t.accumulate(a, da);
    });
}

Tape::ValueId Tape::elu(ValueId a) {
    Tensor out = vrg::elu(value(a));
    return push(std::move(out), [a](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] = g[i] * (x[i] >= 0.0 ? 1.0 : std::exp(x[i]));
        }
        t.accumulate(a, da);
    });
}

Tape::ValueId Tape::relu(ValueId a) {
    Tensor out = vrg::relu(value(a));
    return push(std::move(out), [a](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor da(g.shape());
        // relu'(0) = 0 by convention.
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = x[i] > 0.0 ? g[i] : 0.0;
        t.accumulate(a, da);
    });
}

Tape::ValueId Tape::sqrt_clamped(ValueId a) {
    const Tensor& x = value(a);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) {
            throw DataError("sqrt_clamped: negative input " + std::to_string(x[i]));
        }
        out[i] = std::sqrt(x[i]);
    }
    return push(std::move(out), [a](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] = g[i] * 0.5 / std::max(std::sqrt(x[i]), kSqrtGradFloor);
        }
        t.accumulate(a, da);
    });
}

Tape::ValueId Tape::row_l2_normalize(ValueId a) {
    Tensor out = vrg::l2_normalize_rows(value(a));
    ValueId id = push(std::move(out), nullptr);
    nodes_[static_cast<std::size_t>(id)].backward = [a, id](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        const Tensor& y = t.value(id);
        const std::size_t r = x.dim(0), c = x.dim(1);
        Tensor da({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            double sq = 0.0, dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                sq += x(i, j) * x(i, j);
                dot += g(i, j) * y(i, j);
            }
            const double norm = std::sqrt(sq);
            for (std::size_t j = 0; j < c; ++j) {
                da(i, j) = (g(i, j) - y(i, j) * dot) / norm;
            }
        }
        t.accumulate(a, da);
    };
    return id;
}

Tape::ValueId Tape::row_scale(ValueId a, ValueId s) {
    const Tensor& p = value(a);
    const Tensor& w = value(s);
    require_rank2(p, "row_scale");
    if (w.rank() != 1 || w.dim(0) != p.dim(0)) {
        throw DimensionError("row_scale: scale shape " + shape_to_string(w.shape()) +
                             " does not match rows of " + shape_to_string(p.shape()));
    }
    const std::size_t r = p.dim(0), c = p.dim(1);
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out(i, j) = p(i, j) * w[i];
    }
    require_finite(out, "row_scale");
    return push(std::move(out), [a, s](Tape& t, const Tensor& g) {
        const Tensor& p = t.value(a);
        const Tensor& w = t.value(s);
        const std::size_t r = p.dim(0), c = p.dim(1);
        Tensor da({r, c});
        Tensor ds({r});
        for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                da(i, j) = g(i, j) * w[i];
                acc += g(i, j) * p(i, j);
            }
            ds[i] = acc;
        }
        t.accumulate(a, da);
        t.accumulate(s, ds);
    });
}

Tape::ValueId Tape::kurtosis_rows(ValueId a, double lambda, double sigma_floor, bool detach) {
    const Tensor& p = value(a);
    require_rank2(p, "kurtosis_rows");
    const std::size_t r = p.dim(0), c = p.dim(1);
    if (c < 2) throw DimensionError("kurtosis_rows: needs at least 2 columns");
    Tensor out({r});
    // aux keeps per-row (mu, sigma, m4) for the backward pass.
    Tensor cache({r, 3});
    for (std::size_t i = 0; i < r; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += p(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = p(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double sigma = std::sqrt(var);
        const double t = 1.0 / (sigma + sigma_floor);
        double m4 = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double u = (p(i, j) - mean) * t;
            m4 += u * u * u * u;
        }
        m4 /= static_cast<double>(c);
        out[i] = m4 > 0.0 ? std::pow(m4, lambda) : 0.0;
        cache(i, 0) = mean;
        cache(i, 1) = sigma;
        cache(i, 2) = m4;
    }
    require_finite(out, "kurtosis_rows");
    ValueId id = push(std::move(out), nullptr);
    nodes_[static_cast<std::size_t>(id)].aux = std::move(cache);
    if (!detach) {
        nodes_[static_cast<std::size_t>(id)].backward = [a, id, lambda,
                                                         sigma_floor](Tape& t, const Tensor& g) {
            const Tensor& p = t.value(a);
            const Tensor& cache = t.aux(id);
            const std::size_t r = p.dim(0), c = p.dim(1);
            const double cn = static_cast<double>(c);
            Tensor da({r, c});
            std::vector<double> dev(c), u(c);
            for (std::size_t i = 0; i < r; ++i) {
                const double m4 = cache(i, 2);
                if (g[i] == 0.0 || m4 <= 0.0) continue; // constant row: zero gradient
                const double mean = cache(i, 0);
                const double sigma = cache(i, 1);
                const double tinv = 1.0 / (sigma + sigma_floor);
                double s3d = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    dev[j] = p(i, j) - mean;
                    u[j] = dev[j] * tinv;
                    s3d += u[j] * u[j] * u[j] * dev[j];
                }
                // d m4 / d dev_j, before projecting through dev = p - mean(p).
                double dsum = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    const double term = (4.0 / cn) * tinv * u[j] * u[j] * u[j] -
                                        (4.0 * tinv * tinv / (cn * cn * sigma)) * s3d * dev[j];
                    da(i, j) = term;
                    dsum += term;
                }
                const double dkappa = g[i] * lambda * std::pow(m4, lambda - 1.0);
                const double mean_term = dsum / cn;
                for (std::size_t j = 0; j < c; ++j) {
                    da(i, j) = dkappa * (da(i, j) - mean_term);
                }
            }
            t.accumulate(a, da);
        };
    }
    return id;
}

Tape::ValueId Tape::softmax_cross_entropy(ValueId logits, const std::vector<std::int32_t>& labels) {
    const Tensor& x = value(logits);
    require_rank2(x, "softmax_cross_entropy");
    const std::size_t n = x.dim(0), c = x.dim(1);
    if (labels.size() != n) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(n) + " rows");
    }
    Tensor probs({n, c});
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw DataError("softmax_cross_entropy: label " + std::to_string(y) +
                            " out of range [0, " + std::to_string(c) + ")");
        }
        double mx = x(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(x(i, j) - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(x(i, j) - lse);
        loss -= x(i, static_cast<std::size_t>(y)) - lse;
    }
    loss /= static_cast<double>(n);
    Tensor out = Tensor::scalar(loss);
    require_finite(out, "softmax_cross_entropy");
    ValueId id = push(std::move(out), nullptr);
    nodes_[static_cast<std::size_t>(id)].aux = std::move(probs);
    nodes_[static_cast<std::size_t>(id)].backward = [logits, id, labels](Tape& t, const Tensor& g) {
        const Tensor& pr = t.aux(id);
        const std::size_t n = pr.dim(0), c = pr.dim(1);
        const double scale = g[0] / static_cast<double>(n);
        Tensor dx({n, c});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double onehot = static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
                dx(i, j) = scale * (pr(i, j) - onehot);
            }
        }
        t.accumulate(logits, dx);
    };
    return id;
}

Tape::ValueId Tape::sum(ValueId a) {
    double acc = 0.0;
    for (double v : value(a).span()) acc += v;
    Tensor out = Tensor::scalar(acc);
    require_finite(out, "sum");
    return push(std::move(out), [a](Tape& t, const Tensor& g) {
        Tensor da(t.value(a).shape(), g[0]);
        t.accumulate(a, da);
    });
}

void Tape::backward(ValueId root) {
    if (value(root).size() != 1) {
        throw DimensionError("backward: root must be scalar, got shape " +
                             shape_to_string(value(root).shape()));
    }
    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const Node& n : nodes_) grads_.emplace_back(n.value.shape());
    grads_[static_cast<std::size_t>(root)][0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward) continue;
        const Tensor& g = grads_[i];
        bool nonzero = false;
        for (double v : g.span()) {
            if (v != 0.0) {
                nonzero = true;
                break;
            }
        }
        if (nonzero) n.backward(*this, g);
    }
    for (auto& [id, p] : params_) {
        const Tensor& g = grads_[static_cast<std::size_t>(id)];
        for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
    }
}

} // namespace vrg
