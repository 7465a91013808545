#include "intreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace intreg::io {

using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

json matrix_to_json(const Matrix& A) {
    json rows = json::array();
    for (Index i = 0; i < A.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json bools_to_json(const BoolMatrix& A) {
    json rows = json::array();
    for (Index i = 0; i < A.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < A.cols(); ++j) row.push_back(static_cast<bool>(A(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, Index cols) {
    if (!j.is_array()) throw DataError(DataError::Code::bad_model, "expected a matrix (array of rows)");
    Matrix A(static_cast<Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols)
            throw DataError(DataError::Code::bad_model, "matrix row has the wrong length");
        for (std::size_t c = 0; c < j[i].size(); ++c) A(static_cast<Index>(i), static_cast<Index>(c)) = j[i][c].get<double>();
    }
    return A;
}

json names_to_json(const ColumnNames& n) { return json{{"y", n.y}, {"x", n.x}, {"z", n.z}}; }

ColumnNames names_from_json(const json& j) {
    ColumnNames n;
    if (j.contains("y")) n.y = j["y"].get<std::vector<std::string>>();
    if (j.contains("x")) n.x = j["x"].get<std::vector<std::string>>();
    if (j.contains("z")) n.z = j["z"].get<std::vector<std::vector<std::string>>>();
    return n;
}

std::pair<Vector, Vector> column_moments(const Matrix& A) {
    const double n = static_cast<double>(A.rows());
    Vector mean = A.colwise().mean().transpose();
    Vector sd(A.cols());
    for (Index j = 0; j < A.cols(); ++j) {
        const double ss = (A.col(j).array() - mean[j]).square().sum();
        sd[j] = A.rows() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return {mean, sd};
}

}  // namespace

const char* DataError::kind() const noexcept {
    switch (code_) {
        case Code::file_not_found: return "file_not_found";
        case Code::empty_file: return "empty_file";
        case Code::ragged_row: return "ragged_row";
        case Code::non_numeric: return "non_numeric";
        case Code::header_mismatch: return "header_mismatch";
        case Code::row_count_mismatch: return "row_count_mismatch";
        case Code::zero_variance: return "zero_variance";
        case Code::bad_model: return "bad_model";
    }
    return "data_error";
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(DataError::Code::file_not_found, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Table parse_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Table table;
    while (std::getline(in, line)) {
        ++line_no;
        if (!blank(line)) break;
    }
    if (blank(line)) throw DataError(DataError::Code::empty_file, source + ": no header row");
    table.header = split_line(line);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto cells = split_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (cells.size() != table.header.size())
            throw DataError(DataError::Code::ragged_row, where + ": expected " + std::to_string(table.header.size()) +
                                                             " cells, found " + std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& cell = cells[c];
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[c]);
            if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(row[c]))
                throw DataError(DataError::Code::non_numeric,
                                where + ": column '" + table.header[c] + "' has non-numeric value '" + cell + "'");
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < rows[i].size(); ++c) table.values(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    return table;
}

Table read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

std::string format_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
    out += '\n';
    for (Index i = 0; i < table.values.rows(); ++i) {
        for (Index c = 0; c < table.values.cols(); ++c) out += (c ? "," : "") + format_double(table.values(i, c));
        out += '\n';
    }
    return out;
}

BlockPaths block_paths_in(const fs::path& dir) {
    BlockPaths p{dir / "y.csv", dir / "x.csv", std::nullopt};
    if (fs::exists(dir / "z.csv")) p.z = dir / "z.csv";
    return p;
}

LoadedDataset load_dataset(const std::vector<BlockPaths>& paths) {
    if (paths.empty()) throw ValidationError("no dataset blocks given");
    std::vector<DatasetBlock> blocks;
    ColumnNames names;
    for (std::size_t m = 0; m < paths.size(); ++m) {
        const std::string tag = "block " + std::to_string(m + 1);
        Table y = read_csv(paths[m].y);
        Table x = read_csv(paths[m].x);
        std::optional<Table> z;
        if (paths[m].z) z = read_csv(*paths[m].z);

        if (x.values.rows() != y.values.rows() || (z && z->values.rows() != y.values.rows()))
            throw DataError(DataError::Code::row_count_mismatch,
                            tag + ": y has " + std::to_string(y.values.rows()) + " rows, x has " +
                                std::to_string(x.values.rows()) +
                                (z ? ", z has " + std::to_string(z->values.rows()) : std::string()));
        if (m == 0) {
            names.x = x.header;
            names.y = y.header;
        } else if (x.header != names.x) {
            throw DataError(DataError::Code::header_mismatch,
                            tag + ": x.csv header differs from block 1 (shared covariates must match by name and order)");
        }
        names.z.push_back(z ? z->header : std::vector<std::string>{});
        DatasetBlock b;
        b.Y = std::move(y.values);
        b.X = std::move(x.values);
        b.Z = z ? std::move(z->values) : Matrix(b.Y.rows(), 0);
        blocks.push_back(std::move(b));
    }
    return {IntegratedDataset(std::move(blocks)), std::move(names)};
}

LoadedDataset split_common_covariates(const std::vector<Table>& responses, const std::vector<Table>& covariates) {
    if (responses.size() != covariates.size() || covariates.empty())
        throw ValidationError("need one response table per covariate table");
    std::vector<std::string> common;
    for (const auto& name : covariates.front().header) {
        const bool everywhere = std::all_of(covariates.begin(), covariates.end(), [&](const Table& t) {
            return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
        });
        if (everywhere) common.push_back(name);
    }
    const std::set<std::string> common_set(common.begin(), common.end());

    ColumnNames names;
    names.x = common;
    names.y = responses.front().header;
    std::vector<DatasetBlock> blocks;
    for (std::size_t m = 0; m < covariates.size(); ++m) {
        const Table& t = covariates[m];
        if (t.values.rows() != responses[m].values.rows())
            throw DataError(DataError::Code::row_count_mismatch,
                            "block " + std::to_string(m + 1) + ": responses and covariates differ in row count");
        auto column = [&](const std::string& name) {
            return static_cast<Index>(std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
        };
        DatasetBlock b;
        b.Y = responses[m].values;
        b.X.resize(t.values.rows(), static_cast<Index>(common.size()));
        for (std::size_t j = 0; j < common.size(); ++j) b.X.col(static_cast<Index>(j)) = t.values.col(column(common[j]));
        std::vector<std::string> specific;
        for (const auto& name : t.header)
            if (!common_set.count(name)) specific.push_back(name);
        b.Z.resize(t.values.rows(), static_cast<Index>(specific.size()));
        for (std::size_t j = 0; j < specific.size(); ++j) b.Z.col(static_cast<Index>(j)) = t.values.col(column(specific[j]));
        names.z.push_back(std::move(specific));
        blocks.push_back(std::move(b));
    }
    return {IntegratedDataset(std::move(blocks)), std::move(names)};
}

Standardized standardize(const IntegratedDataset& data, const ColumnNames* names) {
    ScalingRecord rec;
    std::vector<DatasetBlock> blocks;
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& b = data.block(m);
        DatasetBlock out{b.Y, b.X, b.Z};
        auto scale = [&](Matrix& A, VectorList& means, VectorList& sds, const char* which,
                         const std::vector<std::string>* cols) {
            auto [mean, sd] = column_moments(A);
            for (Index j = 0; j < A.cols(); ++j) {
                if (!(sd[j] > 0.0)) {
                    const std::string col = cols && static_cast<std::size_t>(j) < cols->size()
                                                ? "'" + (*cols)[static_cast<std::size_t>(j)] + "'"
                                                : "#" + std::to_string(j + 1);
                    throw DataError(DataError::Code::zero_variance, "block " + std::to_string(m + 1) + ": " + which +
                                                                        " column " + col + " has zero variance");
                }
                A.col(j) = (A.col(j).array() - mean[j]) / sd[j];
            }
            means.push_back(std::move(mean));
            sds.push_back(std::move(sd));
        };
        scale(out.X, rec.x_mean, rec.x_sd, "X", names ? &names->x : nullptr);
        scale(out.Z, rec.z_mean, rec.z_sd, "Z", names && m < names->z.size() ? &names->z[m] : nullptr);
        blocks.push_back(std::move(out));
    }
    return {IntegratedDataset(std::move(blocks)), std::move(rec)};
}

ModelFit back_transform(const ModelFit& fit, const ScalingRecord& s) {
    if (s.x_sd.size() != fit.size()) throw ValidationError("scaling record does not match the fit");
    VectorList alpha;
    MatrixList B, C;
    for (std::size_t m = 0; m < fit.size(); ++m) {
        Matrix Bm = s.x_sd[m].cwiseInverse().asDiagonal() * fit.B[m];
        Matrix Cm = s.z_sd[m].cwiseInverse().asDiagonal() * fit.C[m];
        Vector a = fit.alpha[m];
        if (Bm.size() > 0) a -= Bm.transpose() * s.x_mean[m];
        if (Cm.size() > 0) a -= Cm.transpose() * s.z_mean[m];
        alpha.push_back(std::move(a));
        B.push_back(std::move(Bm));
        C.push_back(std::move(Cm));
    }
    return ModelFit::from_coefficients(std::move(alpha), std::move(B), std::move(C));
}

json fit_to_json(const ModelFit& fit) {
    json blocks = json::array();
    for (std::size_t m = 0; m < fit.size(); ++m) {
        json alpha = json::array();
        for (Index k = 0; k < fit.alpha[m].size(); ++k) alpha.push_back(fit.alpha[m][k]);
        blocks.push_back(json{{"alpha", std::move(alpha)},
                              {"B", matrix_to_json(fit.B[m])},
                              {"C", matrix_to_json(fit.C[m])},
                              {"support_C", bools_to_json(fit.support_C[m])}});
    }
    return json{{"support_B", bools_to_json(fit.support_B)}, {"homogeneous", fit.homogeneous()}, {"blocks", std::move(blocks)}};
}

ModelFit fit_from_json(const json& j) {
    try {
        VectorList alpha;
        MatrixList B, C;
        for (const auto& b : j.at("blocks")) {
            const auto& a = b.at("alpha");
            Vector v(static_cast<Index>(a.size()));
            for (std::size_t k = 0; k < a.size(); ++k) v[static_cast<Index>(k)] = a[k].get<double>();
            B.push_back(matrix_from_json(b.at("B"), v.size()));
            C.push_back(matrix_from_json(b.at("C"), v.size()));
            alpha.push_back(std::move(v));
        }
        return ModelFit::from_coefficients(std::move(alpha), std::move(B), std::move(C));
    } catch (const json::exception& e) {
        throw DataError(DataError::Code::bad_model, std::string("malformed model JSON: ") + e.what());
    }
}

json model_to_json(const ModelDocument& d) {
    json j;
    j["format"] = "intreg-model/1";
    j["hyperparameters"] = {{"lambda", d.hp.lambda}, {"gamma", d.hp.gamma}, {"rho", d.hp.rho}};
    j["diagnostics"] = {{"iterations", d.iterations},
                        {"converged", d.converged},
                        {"kkt_residual", d.kkt_residual},
                        {"consensus_gap", d.consensus_gap},
                        {"objective", d.objective}};
    j["names"] = names_to_json(d.names);
    j["coefficients"] = fit_to_json(d.fit);
    if (d.standardized_fit) j["standardized_coefficients"] = fit_to_json(*d.standardized_fit);
    return j;
}

ModelDocument model_from_json(const json& j) {
    try {
        if (j.value("format", std::string()) != "intreg-model/1")
            throw DataError(DataError::Code::bad_model, "not an intreg model document");
        ModelDocument d;
        const auto& hp = j.at("hyperparameters");
        d.hp = {hp.at("lambda").get<double>(), hp.at("gamma").get<double>(), hp.at("rho").get<double>()};
        const auto& diag = j.at("diagnostics");
        d.iterations = diag.at("iterations").get<long>();
        d.converged = diag.at("converged").get<bool>();
        d.kkt_residual = diag.at("kkt_residual").get<double>();
        d.consensus_gap = diag.at("consensus_gap").get<double>();
        d.objective = diag.at("objective").get<double>();
        if (j.contains("names")) d.names = names_from_json(j["names"]);
        d.fit = fit_from_json(j.at("coefficients"));
        if (j.contains("standardized_coefficients")) d.standardized_fit = fit_from_json(j["standardized_coefficients"]);
        return d;
    } catch (const json::exception& e) {
        throw DataError(DataError::Code::bad_model, std::string("malformed model JSON: ") + e.what());
    }
}

std::string format_cv_matrix(const selection::CvResult& cv) {
    std::string out = "lambda,gamma,cv\n";
    for (std::size_t i = 0; i < cv.grid.lambdas.size(); ++i)
        for (std::size_t g = 0; g < cv.grid.gammas.size(); ++g)
            out += format_double(cv.grid.lambdas[i]) + "," + format_double(cv.grid.gammas[g]) + "," +
                   format_double(cv.cv_matrix(static_cast<Index>(i), static_cast<Index>(g))) + "\n";
    return out;
}

std::string format_boxplot_csv(const sim::StudyResult& study) {
    std::string out = "scenario,method,dataset,response,replicate,mse,fpr,fnr\n";
    for (const auto& r : study.records) {
        out += r.scenario + "," + sim::to_string(r.method) + "," + std::to_string(r.dataset) + "," +
               std::to_string(r.response) + "," + std::to_string(r.replicate) + "," + format_double(r.mse) + "," +
               format_double(r.fpr) + "," + format_double(r.fnr) + "\n";
    }
    return out;
}

json study_to_json(const sim::StudyResult& study) {
    json scenarios = json::array();
    for (const auto& s : study.scenarios)
        scenarios.push_back({{"name", s.name()},
                             {"M", s.M},
                             {"n", s.n},
                             {"s", s.s},
                             {"rho_x", s.rho_x},
                             {"rho_y", s.rho_y},
                             {"seed", s.seed},
                             {"n_test", s.n_test},
                             {"replicates", s.replicates},
                             {"fixed_design", s.fixed_design}});
    json records = json::array();
    for (const auto& r : study.records)
        records.push_back({{"scenario", r.scenario},
                           {"method", sim::to_string(r.method)},
                           {"dataset", r.dataset},
                           {"response", r.response},
                           {"replicate", r.replicate},
                           {"mse", r.mse},
                           {"fpr", r.fpr},
                           {"fnr", r.fnr}});
    json overall = json::array();
    for (const auto& r : study.overall)
        overall.push_back({{"scenario", r.scenario},
                           {"method", sim::to_string(r.method)},
                           {"replicate", r.replicate},
                           {"fpr", r.fpr},
                           {"fnr", r.fnr},
                           {"active_groups", r.active_groups},
                           {"homogeneous", r.homogeneous}});
    json summary = json::array();
    for (const auto& c : study.summary)
        summary.push_back({{"scenario", c.scenario},
                           {"method", sim::to_string(c.method)},
                           {"dataset", c.dataset},
                           {"response", c.response},
                           {"count", c.count},
                           {"mse_q1", c.mse.q1},
                           {"mse_median", c.mse.median},
                           {"mse_q3", c.mse.q3},
                           {"fpr_mean", c.mean_fpr},
                           {"fnr_mean", c.mean_fnr}});
    json failures = json::array();
    for (const auto& f : study.failures)
        failures.push_back({{"scenario", f.scenario},
                            {"method", sim::to_string(f.method)},
                            {"replicate", f.replicate},
                            {"message", f.message}});
    return json{{"format", "intreg-study/1"},
                {"metric_mode", sim::to_string(study.mode)},
                {"absent_methods", {"mglasso"}},
                {"scenarios", std::move(scenarios)},
                {"records", std::move(records)},
                {"overall", std::move(overall)},
                {"summary", std::move(summary)},
                {"failure_count", study.failures.size()},
                {"failures", std::move(failures)}};
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace intreg::io
