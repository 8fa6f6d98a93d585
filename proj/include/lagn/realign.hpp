#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lagn/embedding.hpp"

namespace lagn {

enum class AlignMode { Shared, PerLanguage };
enum class AlignSolver { ClosedForm, Gradient };

// D x D linear map plus offset, x -> W x + b. W is row-major.
struct AffineMap {
    std::vector<double> W;
    std::vector<double> b;

    static AffineMap identity(std::size_t dim);
    std::vector<double> operator()(const std::vector<double>& x) const;
    double frobenius_distance_to_identity() const;
    double offset_norm() const;
};

struct EpochRecord {
    int epoch = 0;
    double loss_align = 0.0;  // L, matched-pair distances
    double loss_drift = 0.0;  // R, drift from the original embeddings
    double total(double lambda) const { return loss_align + lambda * loss_drift; }
};

// Fitted re-alignment model. In per-language mode the pivot language's map
// is the identity and is never stored; in shared mode one map applies to
// every language, pivot included.
struct AffineAlignmentModel {
    AlignMode mode = AlignMode::Shared;
    std::string pivot_lang;
    std::size_t dim = 0;
    double lambda = 1.0;
    AffineMap shared;                            // shared mode only
    std::map<std::string, AffineMap> per_language;  // per-language mode only
    std::vector<EpochRecord> training_log;
    bool converged = true;
    // Which tokens the drift regularizer covered, stamped so downstream
    // results are labeled with the variant used.
    std::string regularizer_variant;
    std::vector<std::string> notes;

    // Map for a language, or nullptr when the identity applies (pivot in
    // per-language mode). Throws for languages a per-language model does
    // not cover.
    const AffineMap* map_for(const std::string& lang) const;
};

struct SolverOpts {
    double step_size = 1e-3;
    int max_epochs = 200;
    double tol = 1e-6;      // relative objective change between epochs
    double damping = 1e-8;  // ridge term on the normal equations
};

struct LossValue {
    double align = 0.0;  // L
    double drift = 0.0;  // R
};

// Evaluates the joint objective's two terms at the given model, as exact
// sums over the corpus. L sums squared distances of mapped link
// endpoints; R sums squared drift of the regularized tokens, where the
// regularized set is pivot-side tokens in shared mode and target-side
// tokens in per-language mode. Sentences referenced by several pairs
// contribute once per pair.
LossValue alignment_loss(const AffineAlignmentModel& model, const ParallelCorpus& corpus,
                         double lambda);

// Minimizes L + lambda * R over affine maps, either by solving the normal
// equations of the quadratic objective or by fixed-step gradient descent
// from the identity. Per-language closed form needs >= dim+1 links per
// language, otherwise the solver falls back to gradient descent for that
// fit and notes it on the model.
AffineAlignmentModel fit_alignment(const ParallelCorpus& corpus, AlignMode mode, double lambda,
                                   AlignSolver solver, const SolverOpts& opts = {});

// Applies the model to every token vector; tokens, masks and metadata are
// untouched.
EmbeddingCorpus apply_alignment(const AffineAlignmentModel& model, const EmbeddingCorpus& corpus,
                                int threads = 1);

void save_model(const AffineAlignmentModel& model, const std::string& path);
AffineAlignmentModel load_model(const std::string& path);
// The model-file JSON document (mode, pivot, lambda, row-major matrices).
std::string model_to_json(const AffineAlignmentModel& model);
AffineAlignmentModel model_from_json(const std::string& text);

} // namespace lagn
