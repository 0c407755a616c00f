#include "avgcn/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "avgcn/error.hpp"

namespace avgcn::num {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::leaf(Tensor value) {
  check_finite(value, "tape leaf");
  nodes_.push_back(Node{std::move(value), {}, false, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  check_finite(value, "tape constant");
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, bool tracked, BackwardFn backward) {
  check_finite(value, "tape op output");
  Node node{std::move(value), {}, false, tracked, {}};
  if (tracked) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& delta) {
  if (!nodes_[id].tracked) return;
  Tensor& g = grad_slot(id);
  if (g.size() != delta.size()) {
    throw DimensionError("gradient shape " + delta.shape_string() +
                         " does not match value shape " + g.shape_string());
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss belongs to another tape");
  if (backward_done_) throw ContractError("backward() already ran on this tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        lv.shape_string());
  }
  backward_done_ = true;
  if (!nodes_[loss.id()].tracked) return;
  grad_slot(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Closures only touch the slots of earlier nodes.
    Tensor g = std::move(n.grad);
    BackwardFn& fn = n.backward;
    fn(*this, g);
    nodes_[i].grad = std::move(g);
  }
  for (Node& n : nodes_) {
    if (n.has_grad) check_finite(n.grad, "gradient");
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape());
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw ContractError("operands live on different tapes");
  return t;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape_string() + " vs " + b.shape_string());
  }
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

// Elementwise unary op whose derivative is expressed through input and output.
template <typename F, typename D>
Var unary(Var x, F f, D dfdx) {
  Tape& t = tape_of(x);
  const std::size_t xi = x.id();
  const std::size_t yi = t.size();
  return t.record(map(x.value(), f), t.tracked(x),
                  [xi, yi, dfdx](Tape& tp, const Tensor& g) {
                    const Tensor& xv = tp.value(Var(&tp, xi));
                    const Tensor& yv = tp.value(Var(&tp, yi));
                    Tensor& gx = tp.grad_slot(xi);
                    for (std::size_t i = 0; i < g.size(); ++i)
                      gx[i] += g[i] * dfdx(xv[i], yv[i]);
                  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(matmul(a.value(), b.value()), t.tracked(a) || t.tracked(b),
                  [ai, bi](Tape& tp, const Tensor& g) {
                    const Tensor& av = tp.value(Var(&tp, ai));
                    const Tensor& bv = tp.value(Var(&tp, bi));
                    if (tp.tracked(Var(&tp, ai)))
                      tp.accumulate(ai, num::matmul(g, num::transpose(bv)));
                    if (tp.tracked(Var(&tp, bi)))
                      tp.accumulate(bi, num::matmul(num::transpose(av), g));
                  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ai = a.id();
  return t.record(num::transpose(a.value()), t.tracked(a),
                  [ai](Tape& tp, const Tensor& g) {
                    tp.accumulate(ai, num::transpose(g));
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] + b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(out), t.tracked(a) || t.tracked(b),
                  [ai, bi](Tape& tp, const Tensor& g) {
                    tp.accumulate(ai, g);
                    tp.accumulate(bi, g);
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] - b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(out), t.tracked(a) || t.tracked(b),
                  [ai, bi](Tape& tp, const Tensor& g) {
                    tp.accumulate(ai, g);
                    if (tp.tracked(Var(&tp, bi))) {
                      Tensor& gb = tp.grad_slot(bi);
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                    }
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] * b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(out), t.tracked(a) || t.tracked(b),
                  [ai, bi](Tape& tp, const Tensor& g) {
                    const Tensor& av = tp.value(Var(&tp, ai));
                    const Tensor& bv = tp.value(Var(&tp, bi));
                    if (tp.tracked(Var(&tp, ai))) {
                      Tensor& ga = tp.grad_slot(ai);
                      for (std::size_t i = 0; i < g.size(); ++i)
                        ga[i] += g[i] * bv[i];
                    }
                    if (tp.tracked(Var(&tp, bi))) {
                      Tensor& gb = tp.grad_slot(bi);
                      for (std::size_t i = 0; i < g.size(); ++i)
                        gb[i] += g[i] * av[i];
                    }
                  });
}

Var add_row(Var x, Var row) {
  Tape& t = tape_of(x, row);
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw DimensionError("add_row: cannot broadcast " + rv.shape_string() +
                         " over " + xv.shape_string());
  }
  Tensor out = Tensor::zeros(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) + rv[c];
  const std::size_t xi = x.id(), ri = row.id();
  return t.record(std::move(out), t.tracked(x) || t.tracked(row),
                  [xi, ri](Tape& tp, const Tensor& g) {
                    tp.accumulate(xi, g);
                    if (tp.tracked(Var(&tp, ri))) {
                      Tensor& gr = tp.grad_slot(ri);
                      for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c)
                          gr[c] += g(r, c);
                    }
                  });
}

Var mul_scalar(Var x, Var s) {
  Tape& t = tape_of(x, s);
  if (s.value().size() != 1) {
    throw DimensionError("mul_scalar: expected a 1x1 scale, got " +
                         s.value().shape_string());
  }
  const double sv = s.value()[0];
  Tensor out = map(x.value(), [sv](double v) { return v * sv; });
  const std::size_t xi = x.id(), si = s.id();
  return t.record(std::move(out), t.tracked(x) || t.tracked(s),
                  [xi, si](Tape& tp, const Tensor& g) {
                    const Tensor& xv = tp.value(Var(&tp, xi));
                    const double sv = tp.value(Var(&tp, si))[0];
                    if (tp.tracked(Var(&tp, xi))) {
                      Tensor& gx = tp.grad_slot(xi);
                      for (std::size_t i = 0; i < g.size(); ++i)
                        gx[i] += g[i] * sv;
                    }
                    if (tp.tracked(Var(&tp, si))) {
                      double acc = 0.0;
                      for (std::size_t i = 0; i < g.size(); ++i)
                        acc += g[i] * xv[i];
                      tp.grad_slot(si)[0] += acc;
                    }
                  });
}

Var scale(Var x, double factor) {
  Tape& t = tape_of(x);
  Tensor out = map(x.value(), [factor](double v) { return v * factor; });
  const std::size_t xi = x.id();
  return t.record(std::move(out), t.tracked(x),
                  [xi, factor](Tape& tp, const Tensor& g) {
                    Tensor& gx = tp.grad_slot(xi);
                    for (std::size_t i = 0; i < g.size(); ++i)
                      gx[i] += g[i] * factor;
                  });
}

Var add_constant(Var x, double c) {
  Tape& t = tape_of(x);
  Tensor out = map(x.value(), [c](double v) { return v + c; });
  const std::size_t xi = x.id();
  return t.record(std::move(out), t.tracked(x),
                  [xi](Tape& tp, const Tensor& g) { tp.accumulate(xi, g); });
}

Var neg(Var x) { return scale(x, -1.0); }

Var sigmoid(Var x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value");
  }
  return unary(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Var square(Var x) {
  return unary(
      x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Var clamp_min(Var x, double floor) {
  return unary(
      x, [floor](double v) { return v > floor ? v : floor; },
      [floor](double v, double) { return v > floor ? 1.0 : 0.0; });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t xi = x.id();
  return t.record(Tensor::scalar(s), t.tracked(x),
                  [xi](Tape& tp, const Tensor& g) {
                    Tensor& gx = tp.grad_slot(xi);
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
                  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var row_sum(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out[r] += xv(r, c);
  const std::size_t xi = x.id();
  return t.record(std::move(out), t.tracked(x),
                  [xi](Tape& tp, const Tensor& g) {
                    Tensor& gx = tp.grad_slot(xi);
                    for (std::size_t r = 0; r < gx.rows(); ++r)
                      for (std::size_t c = 0; c < gx.cols(); ++c)
                        gx(r, c) += g[r];
                  });
}

Var row_norm(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) s += xv(r, c) * xv(r, c);
    out[r] = std::sqrt(s);
  }
  const std::size_t xi = x.id();
  const std::size_t yi = t.size();
  return t.record(std::move(out), t.tracked(x), [xi, yi](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(Var(&tp, xi));
    const Tensor& yv = tp.value(Var(&tp, yi));
    Tensor& gx = tp.grad_slot(xi);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      if (yv[r] == 0.0) continue;
      for (std::size_t c = 0; c < xv.cols(); ++c)
        gx(r, c) += g[r] * xv(r, c) / yv[r];
    }
  });
}

Var log_softmax_rows(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double m = xv(r, 0);
    for (std::size_t c = 1; c < xv.cols(); ++c) m = std::max(m, xv(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) s += std::exp(xv(r, c) - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) - lse;
  }
  const std::size_t xi = x.id();
  const std::size_t yi = t.size();
  return t.record(std::move(out), t.tracked(x), [xi, yi](Tape& tp, const Tensor& g) {
    const Tensor& yv = tp.value(Var(&tp, yi));
    Tensor& gx = tp.grad_slot(xi);
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < yv.cols(); ++c) gs += g(r, c);
      for (std::size_t c = 0; c < yv.cols(); ++c)
        gx(r, c) += g(r, c) - std::exp(yv(r, c)) * gs;
    }
  });
}

Var softmax_rows(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double m = xv(r, 0);
    for (std::size_t c = 1; c < xv.cols(); ++c) m = std::max(m, xv(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      out(r, c) = std::exp(xv(r, c) - m);
      s += out(r, c);
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) /= s;
  }
  const std::size_t xi = x.id();
  const std::size_t yi = t.size();
  return t.record(std::move(out), t.tracked(x), [xi, yi](Tape& tp, const Tensor& g) {
    const Tensor& yv = tp.value(Var(&tp, yi));
    Tensor& gx = tp.grad_slot(xi);
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < yv.cols(); ++c) dot += g(r, c) * yv(r, c);
      for (std::size_t c = 0; c < yv.cols(); ++c)
        gx(r, c) += yv(r, c) * (g(r, c) - dot);
    }
  });
}

Var logsumexp_rows(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double m = xv(r, 0);
    for (std::size_t c = 1; c < xv.cols(); ++c) m = std::max(m, xv(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) s += std::exp(xv(r, c) - m);
    out[r] = m + std::log(s);
  }
  const std::size_t xi = x.id();
  const std::size_t yi = t.size();
  return t.record(std::move(out), t.tracked(x), [xi, yi](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(Var(&tp, xi));
    const Tensor& yv = tp.value(Var(&tp, yi));
    Tensor& gx = tp.grad_slot(xi);
    for (std::size_t r = 0; r < xv.rows(); ++r)
      for (std::size_t c = 0; c < xv.cols(); ++c)
        gx(r, c) += g[r] * std::exp(xv(r, c) - yv[r]);
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row counts differ " +
                         av.shape_string() + " vs " + bv.shape_string());
  }
  const std::size_t ca = av.cols(), cb = bv.cols();
  Tensor out = Tensor::zeros(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < ca; ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < cb; ++c) out(r, ca + c) = bv(r, c);
  }
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(out), t.tracked(a) || t.tracked(b),
                  [ai, bi, ca, cb](Tape& tp, const Tensor& g) {
                    if (tp.tracked(Var(&tp, ai))) {
                      Tensor& ga = tp.grad_slot(ai);
                      for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < ca; ++c)
                          ga(r, c) += g(r, c);
                    }
                    if (tp.tracked(Var(&tp, bi))) {
                      Tensor& gb = tp.grad_slot(bi);
                      for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < cb; ++c)
                          gb(r, c) += g(r, ca + c);
                    }
                  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows of nothing");
  Tape& t = tape_of(parts.front());
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool tracked = false;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ContractError("operands live on different tapes");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts differ");
    }
    rows += p.rows();
    tracked = tracked || t.tracked(p);
  }
  Tensor out = Tensor::zeros(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t at = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + at);
    at += v.size();
    ids.push_back(p.id());
  }
  return t.record(std::move(out), tracked,
                  [ids = std::move(ids)](Tape& tp, const Tensor& g) {
                    std::size_t at = 0;
                    for (std::size_t id : ids) {
                      const std::size_t n = tp.value(Var(&tp, id)).size();
                      if (tp.tracked(Var(&tp, id))) {
                        Tensor& gp = tp.grad_slot(id);
                        for (std::size_t i = 0; i < n; ++i) gp[i] += g[at + i];
                      }
                      at += n;
                    }
                  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (start + count > xv.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceeds " +
                         xv.shape_string());
  }
  Tensor out = Tensor::zeros(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, start + c);
  const std::size_t xi = x.id();
  return t.record(std::move(out), t.tracked(x),
                  [xi, start, count](Tape& tp, const Tensor& g) {
                    Tensor& gx = tp.grad_slot(xi);
                    for (std::size_t r = 0; r < g.rows(); ++r)
                      for (std::size_t c = 0; c < count; ++c)
                        gx(r, start + c) += g(r, c);
                  });
}

Var slice_rows(Var x, std::size_t start, std::size_t count) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (start + count > xv.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceeds " +
                         xv.shape_string());
  }
  const std::size_t cols = xv.cols();
  Tensor out = Tensor::zeros(count, cols);
  std::copy(xv.data().begin() + start * cols,
            xv.data().begin() + (start + count) * cols, out.data().begin());
  const std::size_t xi = x.id();
  return t.record(std::move(out), t.tracked(x),
                  [xi, start, cols](Tape& tp, const Tensor& g) {
                    Tensor& gx = tp.grad_slot(xi);
                    for (std::size_t i = 0; i < g.size(); ++i)
                      gx[start * cols + i] += g[i];
                  });
}

LstmState lstm_cell(Var x, const LstmState& state, const LstmWeights& w) {
  const std::size_t hidden = state.h.cols();
  if (w.w_input.rows() != x.cols() || w.w_input.cols() != 4 * hidden ||
      w.w_hidden.rows() != hidden || w.w_hidden.cols() != 4 * hidden ||
      w.bias.cols() != 4 * hidden || state.c.cols() != hidden ||
      state.c.rows() != state.h.rows() || x.rows() != state.h.rows()) {
    throw DimensionError(
        "lstm_cell: inconsistent shapes x=" + x.value().shape_string() +
        " h=" + state.h.value().shape_string() +
        " c=" + state.c.value().shape_string() +
        " w_input=" + w.w_input.value().shape_string() +
        " w_hidden=" + w.w_hidden.value().shape_string() +
        " bias=" + w.bias.value().shape_string());
  }
  Var gates =
      add_row(add(matmul(x, w.w_input), matmul(state.h, w.w_hidden)), w.bias);
  Var in = sigmoid(slice_cols(gates, 0, hidden));
  Var forget = sigmoid(slice_cols(gates, hidden, hidden));
  Var cell = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var out = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(forget, state.c), mul(in, cell));
  Var h = mul(out, tanh(c));
  return {h, c};
}

}  // namespace avgcn::num
