#ifndef ATDL_MODEL_IO_HPP
#define ATDL_MODEL_IO_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "atdl/atdl.hpp"
#include "atdl/baselines.hpp"
#include "atdl/network.hpp"
#include "atdl/stats.hpp"

namespace atdl {

enum class ModelKind : std::uint32_t {
    SourceLinear = 0, // transfer-ready source (linear output)
    Target = 1,       // transferred model with relation vectors
    NonTransfer = 2,
    Ssl = 3,
    Agrawal = 4,
    Oquab = 5,
    PcaLogistic = 6,
};

const char *to_string(ModelKind k);
ModelKind baseline_model_kind(BaselineKind k);

/// On-disk model (magic ATDLNN01): header with layer specs and tags, the
/// parameters, optional relation-vector and PCA blocks, and a trailing byte
/// checksum. Parameters are stored as 64-bit floats unless `save_f32` asks
/// for the downcast (flagged in the header).
struct ModelFile {
    ModelKind kind = ModelKind::SourceLinear;
    LossKind loss = LossKind::SquaredError;
    bool save_f32 = false;
    Network net;
    std::vector<std::string> label_names;
    std::string provenance;
    std::optional<RelationSet> relations;
    std::optional<PcaModel> pca;
    std::size_t pca_dims = 0;

    SourceModel as_source_model() const;
    TargetModel as_target_model() const;
    BaselineClassifier as_baseline() const;
};

void save_model(const ModelFile &model, const std::string &path);
ModelFile load_model(const std::string &path);

} // namespace atdl

#endif
