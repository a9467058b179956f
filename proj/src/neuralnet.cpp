#include "respred/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "respred/rng.hpp"

namespace respred::nn {

void NetworkConfig::validate() const {
    if (hidden_units < 1)
        throw std::invalid_argument("hidden_units must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (learning_rate <= 0.0)
        throw std::invalid_argument("learning_rate must be positive");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (early_stop_patience < 1)
        throw std::invalid_argument("early_stop_patience must be >= 1");
    if (early_stop_min_delta < 0.0)
        throw std::invalid_argument("early_stop_min_delta must be >= 0");
}

std::size_t NetworkConfig::gate_count() const {
    return kind == Kind::lstm && lstm_mode == LstmWeightMode::standard ? 4 : 1;
}

namespace {

struct Layout {
    std::size_t m, n_h, gates;
    bool recurrent, cell;

    explicit Layout(const NetworkParameters& p)
        : m(p.input_dim), n_h(p.hidden_units), gates(p.gate_count()),
          recurrent(p.has_recurrence()), cell(p.has_cell()) {}

    std::size_t per_gate() const {
        return m * n_h + (recurrent ? n_h : 0) + 1;
    }
    std::size_t cell_offset() const { return gates * per_gate(); }
    std::size_t output_offset() const {
        return cell_offset() + (cell ? n_h : 0);
    }
    std::size_t total() const { return output_offset() + n_h + 1; }
};

} // namespace

std::size_t NetworkParameters::input_weight_index(std::size_t gate, std::size_t j,
                                                  std::size_t k) const {
    Layout lay(*this);
    return gate * lay.per_gate() + j * lay.n_h + k;
}

std::size_t NetworkParameters::recurrent_weight_index(std::size_t gate,
                                                      std::size_t k) const {
    Layout lay(*this);
    return gate * lay.per_gate() + lay.m * lay.n_h + k;
}

std::size_t NetworkParameters::bias_index(std::size_t gate) const {
    Layout lay(*this);
    return gate * lay.per_gate() + lay.m * lay.n_h +
           (lay.recurrent ? lay.n_h : 0);
}

std::size_t NetworkParameters::cell_weight_index(std::size_t k) const {
    return Layout(*this).cell_offset() + k;
}

std::size_t NetworkParameters::output_weight_index(std::size_t k) const {
    return Layout(*this).output_offset() + k;
}

std::size_t NetworkParameters::output_bias_index() const {
    Layout lay(*this);
    return lay.output_offset() + lay.n_h;
}

NetworkParameters NetworkParameters::zeros(const NetworkConfig& config) {
    config.validate();
    NetworkParameters p;
    p.kind = config.kind;
    p.lstm_mode = config.lstm_mode;
    p.input_dim = config.input_dim;
    p.hidden_units = config.hidden_units;
    p.values.assign(Layout(p).total(), 0.0);
    return p;
}

StepState StepState::zero(const NetworkParameters& params) {
    StepState s;
    s.h.assign(params.hidden_units, 0.0);
    if (params.has_cell()) s.c.assign(params.hidden_units, 0.0);
    return s;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

void check_dims(const NetworkParameters& params, std::span<const double> x) {
    if (x.size() != params.input_dim)
        throw DimensionMismatch("input row has " + std::to_string(x.size()) +
                                " values, network expects " +
                                std::to_string(params.input_dim));
}

// Pre-activation of neuron k for one gate's weight set.
double pre_activation(const NetworkParameters& p, std::size_t gate,
                      std::span<const double> x, const double* h_prev,
                      std::size_t k) {
    double z = p.hidden_bias(gate);
    for (std::size_t j = 0; j < p.input_dim; ++j)
        z += p.input_weight(gate, j, k) * x[j];
    if (h_prev) z += p.recurrent_weight(gate, k) * h_prev[k];
    return z;
}

} // namespace

std::vector<double> ann_hidden(std::span<const double> x,
                               const NetworkParameters& params) {
    check_dims(params, x);
    std::vector<double> h(params.hidden_units);
    for (std::size_t k = 0; k < params.hidden_units; ++k)
        h[k] = relu(pre_activation(params, 0, x, nullptr, k));
    return h;
}

std::vector<double> rnn_hidden(std::span<const double> x,
                               std::span<const double> h_prev,
                               const NetworkParameters& params) {
    check_dims(params, x);
    if (h_prev.size() != params.hidden_units)
        throw DimensionMismatch("previous hidden state size mismatch");
    std::vector<double> h(params.hidden_units);
    for (std::size_t k = 0; k < params.hidden_units; ++k)
        h[k] = relu(pre_activation(params, 0, x, h_prev.data(), k));
    return h;
}

CellState lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                    std::span<const double> c_prev,
                    const NetworkParameters& params) {
    check_dims(params, x);
    if (h_prev.size() != params.hidden_units ||
        c_prev.size() != params.hidden_units)
        throw DimensionMismatch("previous state size mismatch");

    const std::size_t n_h = params.hidden_units;
    const bool literal = params.lstm_mode == LstmWeightMode::paper_literal;

    CellState out;
    out.hidden.resize(n_h);
    out.cell.resize(n_h);
    out.forget_gate.resize(n_h);
    out.input_gate.resize(n_h);

    for (std::size_t k = 0; k < n_h; ++k) {
        double sf, si, tg, so, tanh_bias;
        if (literal) {
            // One shared pre-activation feeds every gate, exactly as printed.
            double pre = pre_activation(params, 0, x, h_prev.data(), k);
            sf = si = so = logistic(pre);
            tg = std::tanh(pre);
            tanh_bias = params.hidden_bias(0);
        } else {
            sf = logistic(pre_activation(params, kForgetGate, x, h_prev.data(), k));
            si = logistic(pre_activation(params, kInputGate, x, h_prev.data(), k));
            tg = std::tanh(pre_activation(params, kCandidateGate, x, h_prev.data(), k));
            so = logistic(pre_activation(params, kOutputGate, x, h_prev.data(), k));
            tanh_bias = params.hidden_bias(kOutputGate);
        }
        out.forget_gate[k] = c_prev[k] * sf;
        out.input_gate[k] = si * tg;
        out.cell[k] = out.forget_gate[k] + out.input_gate[k];
        out.hidden[k] =
            so * std::tanh(params.cell_weight(k) * out.cell[k] + tanh_bias);
    }
    return out;
}

double output(std::span<const double> h, const NetworkParameters& params) {
    if (h.size() != params.hidden_units)
        throw DimensionMismatch("hidden vector size mismatch");
    double y = params.output_bias();
    for (std::size_t k = 0; k < params.hidden_units; ++k)
        y += params.output_weight(k) * h[k];
    return y;
}

StepResult forward_step(const NetworkParameters& params,
                        std::span<const double> x, const StepState& prev) {
    StepResult r;
    r.state = prev;
    switch (params.kind) {
    case Kind::ann:
        r.state.h = ann_hidden(x, params);
        break;
    case Kind::rnn:
        r.state.h = rnn_hidden(x, prev.h, params);
        break;
    case Kind::lstm: {
        CellState cs = lstm_cell(x, prev.h, prev.c, params);
        r.state.h = std::move(cs.hidden);
        r.state.c = std::move(cs.cell);
        break;
    }
    }
    r.prediction = output(r.state.h, params);
    return r;
}

std::vector<double> forward_sequence(const NetworkParameters& params,
                                     const std::vector<std::vector<double>>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    StepState state = StepState::zero(params);
    for (const auto& row : rows) {
        StepResult step = forward_step(params, row, state);
        out.push_back(step.prediction);
        state = std::move(step.state);
    }
    return out;
}

StepGradients gradients(const NetworkParameters& params,
                        std::span<const double> x, double target,
                        const StepState& prev) {
    check_dims(params, x);
    const std::size_t m = params.input_dim;
    const std::size_t n_h = params.hidden_units;

    StepGradients out;

    NetworkParameters grads_view = params; // reuse the layout for indexing
    std::fill(grads_view.values.begin(), grads_view.values.end(), 0.0);

    // Forward pass, keeping intermediates.
    std::vector<double> h(n_h);
    std::vector<double> pre(n_h);
    std::vector<double> sf(n_h), si(n_h), tg(n_h), so(n_h), u(n_h), v(n_h),
        cell(n_h);
    const bool literal = params.lstm_mode == LstmWeightMode::paper_literal;

    switch (params.kind) {
    case Kind::ann:
    case Kind::rnn: {
        const double* h_prev = params.kind == Kind::rnn ? prev.h.data() : nullptr;
        for (std::size_t k = 0; k < n_h; ++k) {
            pre[k] = pre_activation(params, 0, x, h_prev, k);
            h[k] = relu(pre[k]);
        }
        break;
    }
    case Kind::lstm: {
        std::vector<double> zf(n_h), zi(n_h), zg(n_h), zo(n_h);
        for (std::size_t k = 0; k < n_h; ++k) {
            if (literal) {
                double p = pre_activation(params, 0, x, prev.h.data(), k);
                zf[k] = zi[k] = zg[k] = zo[k] = p;
            } else {
                zf[k] = pre_activation(params, kForgetGate, x, prev.h.data(), k);
                zi[k] = pre_activation(params, kInputGate, x, prev.h.data(), k);
                zg[k] = pre_activation(params, kCandidateGate, x, prev.h.data(), k);
                zo[k] = pre_activation(params, kOutputGate, x, prev.h.data(), k);
            }
            sf[k] = logistic(zf[k]);
            si[k] = logistic(zi[k]);
            tg[k] = std::tanh(zg[k]);
            so[k] = logistic(zo[k]);
            cell[k] = prev.c[k] * sf[k] + si[k] * tg[k];
            double tanh_bias =
                literal ? params.hidden_bias(0) : params.hidden_bias(kOutputGate);
            u[k] = params.cell_weight(k) * cell[k] + tanh_bias;
            v[k] = std::tanh(u[k]);
            h[k] = so[k] * v[k];
        }
        break;
    }
    }

    out.prediction = output(h, params);
    const double err = 2.0 * (out.prediction - target);

    // Output layer.
    grads_view.output_bias() = err;
    std::vector<double> dh(n_h);
    for (std::size_t k = 0; k < n_h; ++k) {
        grads_view.output_weight(k) = err * h[k];
        dh[k] = err * params.output_weight(k);
    }

    switch (params.kind) {
    case Kind::ann:
    case Kind::rnn: {
        const double* h_prev = params.kind == Kind::rnn ? prev.h.data() : nullptr;
        for (std::size_t k = 0; k < n_h; ++k) {
            double dz = pre[k] > 0.0 ? dh[k] : 0.0;
            grads_view.hidden_bias(0) += dz;
            for (std::size_t j = 0; j < m; ++j)
                grads_view.input_weight(0, j, k) += dz * x[j];
            if (h_prev) grads_view.recurrent_weight(0, k) += dz * h_prev[k];
        }
        break;
    }
    case Kind::lstm: {
        for (std::size_t k = 0; k < n_h; ++k) {
            double dso = dh[k] * v[k];
            double dv = dh[k] * so[k];
            double du = dv * (1.0 - v[k] * v[k]);
            grads_view.cell_weight(k) += du * cell[k];
            double dc = du * params.cell_weight(k);
            double dsf = dc * prev.c[k];
            double dsi = dc * tg[k];
            double dtg = dc * si[k];

            double dzf = dsf * sf[k] * (1.0 - sf[k]);
            double dzi = dsi * si[k] * (1.0 - si[k]);
            double dzg = dtg * (1.0 - tg[k] * tg[k]);
            double dzo = dso * so[k] * (1.0 - so[k]);

            if (literal) {
                double dpre = dzf + dzi + dzg + dzo;
                grads_view.hidden_bias(0) += dpre + du; // du: the tanh's bias term
                for (std::size_t j = 0; j < m; ++j)
                    grads_view.input_weight(0, j, k) += dpre * x[j];
                grads_view.recurrent_weight(0, k) += dpre * prev.h[k];
            } else {
                const double dz[4] = {dzf, dzi, dzg, dzo};
                for (std::size_t g = 0; g < 4; ++g) {
                    grads_view.hidden_bias(g) += dz[g];
                    for (std::size_t j = 0; j < m; ++j)
                        grads_view.input_weight(g, j, k) += dz[g] * x[j];
                    grads_view.recurrent_weight(g, k) += dz[g] * prev.h[k];
                }
                grads_view.hidden_bias(kOutputGate) += du; // tanh bias term
            }
        }
        break;
    }
    }

    out.state.h = std::move(h);
    if (params.has_cell()) out.state.c = std::move(cell);
    out.values = std::move(grads_view.values);
    return out;
}

void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state, double alpha) {
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw DimensionMismatch("adam_step: size mismatch");
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.t;
    state.beta1_pow *= beta1;
    state.beta2_pow *= beta2;
    const double bc1 = 1.0 - state.beta1_pow;
    const double bc2 = 1.0 - state.beta2_pow;
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        params[i] -= alpha * m_hat / (std::sqrt(v_hat) + eps);
    }
}

NetworkParameters init_params(const NetworkConfig& config) {
    NetworkParameters p = NetworkParameters::zeros(config);
    Rng rng(config.seed);

    auto limit = [](std::size_t fan_in, std::size_t fan_out) {
        return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    };
    const double in_limit = limit(config.input_dim, config.hidden_units);
    const double rec_limit = limit(config.hidden_units, config.hidden_units);
    const double out_limit = limit(config.hidden_units, 1);

    for (std::size_t g = 0; g < p.gate_count(); ++g) {
        for (std::size_t j = 0; j < p.input_dim; ++j)
            for (std::size_t k = 0; k < p.hidden_units; ++k)
                p.input_weight(g, j, k) = rng.uniform(-in_limit, in_limit);
        if (p.has_recurrence())
            for (std::size_t k = 0; k < p.hidden_units; ++k)
                p.recurrent_weight(g, k) = rng.uniform(-rec_limit, rec_limit);
    }
    if (p.has_cell())
        for (std::size_t k = 0; k < p.hidden_units; ++k)
            p.cell_weight(k) = rng.uniform(-rec_limit, rec_limit);
    for (std::size_t k = 0; k < p.hidden_units; ++k)
        p.output_weight(k) = rng.uniform(-out_limit, out_limit);
    return p;
}

TrainedNetwork train(const NetworkConfig& config,
                     const data::NormalizedDataset& ds,
                     std::span<const std::size_t> subset,
                     const data::SplitView& view) {
    config.validate();
    if (subset.size() != config.input_dim)
        throw DimensionMismatch("subset size does not match config.input_dim");
    if (view.train.size() < 1 || view.train.begin != 0)
        throw std::invalid_argument("training range must start the series");

    std::vector<std::size_t> subset_vec(subset.begin(), subset.end());
    const auto rows = ds.target_rows(subset_vec);

    TrainedNetwork net;
    net.config = config;
    net.subset = subset_vec;
    net.params = init_params(config);

    AdamState adam = AdamState::zero(net.params.size());
    double previous = std::numeric_limits<double>::infinity();
    int plateau = 0;

    const bool want_val = !view.val.empty();

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        StepState state = StepState::zero(net.params);
        double sum_sq = 0.0;
        for (std::size_t t = view.train.begin; t < view.train.end; ++t) {
            StepGradients sg = gradients(net.params, rows[t], ds.delta_p[t], state);
            double e = sg.prediction - ds.delta_p[t];
            sum_sq += e * e;
            adam_step(net.params.values, sg.values, adam, config.learning_rate);
            state = std::move(sg.state);
        }
        double train_loss = sum_sq / static_cast<double>(view.train.size());
        net.train_loss_history.push_back(train_loss);
        net.epochs_run = epoch;

        double val_sum = 0.0, val_loss = 0.0;
        if (want_val) {
            StepState vstate = StepState::zero(net.params);
            for (std::size_t t = 0; t < view.val.end; ++t) {
                StepResult step = forward_step(net.params, rows[t], vstate);
                vstate = std::move(step.state);
                if (view.val.contains(t)) {
                    double e = step.prediction - ds.delta_p[t];
                    val_sum += e * e;
                }
            }
            val_loss = val_sum / static_cast<double>(view.val.size());
            net.val_loss_history.push_back(val_loss);
        }

        if (!std::isfinite(train_loss) || (want_val && !std::isfinite(val_loss)))
            throw NonFiniteLoss("loss became non-finite at epoch " +
                                std::to_string(epoch));

        // Early stopping watches the epoch's total squared-error loss (the
        // quantity the optimizer descends); the recorded histories are MSE.
        // Ten consecutive epochs whose change stays under min_delta stop the
        // run.
        double monitored =
            config.stop_monitor == StopMonitor::training ? sum_sq : val_sum;
        if (previous - monitored < config.early_stop_min_delta)
            ++plateau;
        else
            plateau = 0;
        previous = monitored;
        if (plateau >= config.early_stop_patience) break;
    }
    return net;
}

std::vector<double> predict(const TrainedNetwork& net,
                            const data::NormalizedDataset& ds,
                            data::IndexRange range) {
    if (range.end > ds.n_targets() || range.begin >= range.end)
        throw DimensionMismatch("predict: bad range");
    const auto rows = ds.target_rows(net.subset);

    std::vector<double> out;
    out.reserve(range.size());
    StepState state = StepState::zero(net.params);
    for (std::size_t t = 0; t < range.end; ++t) {
        StepResult step = forward_step(net.params, rows[t], state);
        state = std::move(step.state);
        if (t >= range.begin) out.push_back(step.prediction);
    }
    return out;
}

} // namespace respred::nn
