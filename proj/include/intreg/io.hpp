#pragma once

#include "intreg/admm.hpp"
#include "intreg/selection.hpp"
#include "intreg/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace intreg::io {

namespace fs = std::filesystem;

class DataError : public Error {
public:
    enum class Code {
        file_not_found,
        empty_file,
        ragged_row,
        non_numeric,
        header_mismatch,
        row_count_mismatch,
        zero_variance,
        bad_model,
    };

    DataError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const noexcept { return code_; }
    const char* kind() const noexcept override;

private:
    Code code_;
};

/// A numeric CSV table with a header row.
struct Table {
    std::vector<std::string> header;
    Matrix values;
};

Table parse_csv(const std::string& text, const std::string& source = "<memory>");
Table read_csv(const fs::path& path);
std::string format_csv(const Table& table);

/// Shortest text that parses back to the same double.
std::string format_double(double x);

struct BlockPaths {
    fs::path y;
    fs::path x;
    std::optional<fs::path> z;
};

/// dir/y.csv, dir/x.csv and dir/z.csv when present.
BlockPaths block_paths_in(const fs::path& dir);

struct ColumnNames {
    std::vector<std::string> y;
    std::vector<std::string> x;
    std::vector<std::vector<std::string>> z;
};

struct LoadedDataset {
    IntegratedDataset data;
    ColumnNames names;
};

/// Reads and validates all blocks. X headers must be identical (same names,
/// same order) across blocks; a block without z.csv has r = 0.
LoadedDataset load_dataset(const std::vector<BlockPaths>& blocks);

/// Partitions each dataset's covariates into those present in every dataset
/// (shared, ordered as in the first dataset) and the rest (specific).
LoadedDataset split_common_covariates(const std::vector<Table>& responses, const std::vector<Table>& covariates);

/// Column means and sample standard deviations (n - 1 denominator) used to
/// standardize each block's X and Z.
struct ScalingRecord {
    VectorList x_mean, x_sd, z_mean, z_sd;
};

struct Standardized {
    IntegratedDataset data;
    ScalingRecord scaling;
};

/// Centres and scales every X and Z column per dataset; responses untouched.
/// Zero-variance columns raise DataError naming the column.
Standardized standardize(const IntegratedDataset& data, const ColumnNames* names = nullptr);

/// Coefficients on the original covariate scale, giving the same predictions
/// on raw data as `fit` gives on standardized data.
ModelFit back_transform(const ModelFit& fit, const ScalingRecord& scaling);

// JSON documents -----------------------------------------------------------

nlohmann::ordered_json fit_to_json(const ModelFit& fit);
ModelFit fit_from_json(const nlohmann::ordered_json& j);

/// Everything `report` needs: coefficients, supports and solver diagnostics.
struct ModelDocument {
    HyperParams hp;
    ModelFit fit;
    std::optional<ModelFit> standardized_fit;
    ColumnNames names;
    long iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    double consensus_gap = 0.0;
    double objective = 0.0;
};

nlohmann::ordered_json model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const nlohmann::ordered_json& j);

/// Long-format cv table: lambda,gamma,cv.
std::string format_cv_matrix(const selection::CvResult& cv);

/// scenario,method,dataset,response,replicate,mse,fpr,fnr
std::string format_boxplot_csv(const sim::StudyResult& study);
nlohmann::ordered_json study_to_json(const sim::StudyResult& study);

/// Writes via a temporary file in the same directory and renames it into place.
void atomic_write(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

}  // namespace intreg::io
