#ifndef RESPRED_NEURALNET_HPP
#define RESPRED_NEURALNET_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "respred/dataset.hpp"

namespace respred::nn {

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training aborted because the loss left the finite range; the run counts as
// a failed repetition.
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { ann, rnn, lstm };

// paper_literal keeps the published formulation this model family follows:
// one shared set of input/recurrent weights and one bias across all gates.
// standard gives every gate its own parameters, as mainstream LSTMs do.
enum class LstmWeightMode { standard, paper_literal };

enum class StopMonitor { training, validation };

struct NetworkConfig {
    Kind kind = Kind::ann;
    std::size_t input_dim = 1;
    std::size_t hidden_units = 1;
    double learning_rate = 1e-2;
    int max_epochs = 1000;
    double early_stop_min_delta = 1e-4;
    int early_stop_patience = 10;
    std::uint64_t seed = 0;
    LstmWeightMode lstm_mode = LstmWeightMode::standard;
    StopMonitor stop_monitor = StopMonitor::training;

    void validate() const;
    // Parameter groups: 1 everywhere except standard-mode LSTM, which keeps
    // separate weights for the forget, input, candidate and output gates.
    std::size_t gate_count() const;
};

// Gate order in standard LSTM mode.
inline constexpr std::size_t kForgetGate = 0;
inline constexpr std::size_t kInputGate = 1;
inline constexpr std::size_t kCandidateGate = 2;
inline constexpr std::size_t kOutputGate = 3;

// All weights and biases in one flat vector with named accessors, so the
// optimizer and the finite-difference checks can treat parameters uniformly.
//
// Layout per gate g: input weights (m x n_h, row j neuron k at j*n_h+k),
// then recurrent weights (n_h, RNN/LSTM), then the gate bias; followed by
// the LSTM cell weights (n_h), the output weights (n_h) and the output bias.
struct NetworkParameters {
    Kind kind = Kind::ann;
    LstmWeightMode lstm_mode = LstmWeightMode::standard;
    std::size_t input_dim = 0;
    std::size_t hidden_units = 0;
    std::vector<double> values;

    static NetworkParameters zeros(const NetworkConfig& config);

    bool has_recurrence() const { return kind != Kind::ann; }
    bool has_cell() const { return kind == Kind::lstm; }
    std::size_t gate_count() const {
        return kind == Kind::lstm && lstm_mode == LstmWeightMode::standard ? 4 : 1;
    }
    std::size_t size() const { return values.size(); }

    double& input_weight(std::size_t gate, std::size_t j, std::size_t k) {
        return values[input_weight_index(gate, j, k)];
    }
    double input_weight(std::size_t gate, std::size_t j, std::size_t k) const {
        return values[input_weight_index(gate, j, k)];
    }
    double& recurrent_weight(std::size_t gate, std::size_t k) {
        return values[recurrent_weight_index(gate, k)];
    }
    double recurrent_weight(std::size_t gate, std::size_t k) const {
        return values[recurrent_weight_index(gate, k)];
    }
    double& hidden_bias(std::size_t gate) { return values[bias_index(gate)]; }
    double hidden_bias(std::size_t gate) const { return values[bias_index(gate)]; }
    double& cell_weight(std::size_t k) { return values[cell_weight_index(k)]; }
    double cell_weight(std::size_t k) const { return values[cell_weight_index(k)]; }
    double& output_weight(std::size_t k) { return values[output_weight_index(k)]; }
    double output_weight(std::size_t k) const { return values[output_weight_index(k)]; }
    double& output_bias() { return values[output_bias_index()]; }
    double output_bias() const { return values[output_bias_index()]; }

    std::size_t input_weight_index(std::size_t gate, std::size_t j,
                                   std::size_t k) const;
    std::size_t recurrent_weight_index(std::size_t gate, std::size_t k) const;
    std::size_t bias_index(std::size_t gate) const;
    std::size_t cell_weight_index(std::size_t k) const;
    std::size_t output_weight_index(std::size_t k) const;
    std::size_t output_bias_index() const;
};

// Hidden/cell state threaded through a sequence.
struct StepState {
    std::vector<double> h;
    std::vector<double> c;

    static StepState zero(const NetworkParameters& params);
};

// One LSTM evaluation with gate diagnostics (f_k includes the multiplication
// by the previous cell value).
struct CellState {
    std::vector<double> hidden;
    std::vector<double> cell;
    std::vector<double> forget_gate;
    std::vector<double> input_gate;
};

double relu(double x);
double logistic(double x);

std::vector<double> ann_hidden(std::span<const double> x,
                               const NetworkParameters& params);
std::vector<double> rnn_hidden(std::span<const double> x,
                               std::span<const double> h_prev,
                               const NetworkParameters& params);
CellState lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                    std::span<const double> c_prev,
                    const NetworkParameters& params);
double output(std::span<const double> h, const NetworkParameters& params);

struct StepResult {
    double prediction = 0.0;
    StepState state;
};

StepResult forward_step(const NetworkParameters& params,
                        std::span<const double> x, const StepState& prev);

// Predictions for every row, threading the recurrent state from zero.
std::vector<double> forward_sequence(const NetworkParameters& params,
                                     const std::vector<std::vector<double>>& rows);

// Exact gradients of the squared error (prediction - target)^2 for a single
// step, treating the incoming state as constant (truncated BPTT, window 1).
struct StepGradients {
    std::vector<double> values; // same layout as NetworkParameters
    double prediction = 0.0;
    StepState state;
};

StepGradients gradients(const NetworkParameters& params,
                        std::span<const double> x, double target,
                        const StepState& prev);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
    double beta1_pow = 1.0; // beta1^t, maintained incrementally
    double beta2_pow = 1.0;

    static AdamState zero(std::size_t size) {
        AdamState s;
        s.m.assign(size, 0.0);
        s.v.assign(size, 0.0);
        return s;
    }
};

// One bias-corrected Adam update (beta1=0.9, beta2=0.999, eps=1e-8).
void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state, double alpha);

// Uniform fan-based weight initialization, zero biases; deterministic in
// config.seed.
NetworkParameters init_params(const NetworkConfig& config);

struct TrainedNetwork {
    NetworkConfig config;
    NetworkParameters params;
    std::vector<std::size_t> subset; // covariate indices the inputs came from
    int epochs_run = 0;
    std::vector<double> train_loss_history; // per-epoch MSE on delta-P targets
    std::vector<double> val_loss_history;
};

// Per-observation training with Adam and early stopping. The recurrent state
// resets to zero at the start of every epoch and threads chronologically
// through the training range.
TrainedNetwork train(const NetworkConfig& config,
                     const data::NormalizedDataset& ds,
                     std::span<const std::size_t> subset,
                     const data::SplitView& view);

// Predictions over a target range, with states warm-started by running the
// full history from time zero up to the end of the range.
std::vector<double> predict(const TrainedNetwork& net,
                            const data::NormalizedDataset& ds,
                            data::IndexRange range);

} // namespace respred::nn

#endif // RESPRED_NEURALNET_HPP
