#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slr/landmarks.hpp"

namespace slr {

/// Number of columns in a record row: 63 + 63 + 75 coordinates + 3 metadata.
inline constexpr int kRecordColumns = 3 * (2 * kHandPoints + kPosePoints) + 3;

/// Canonical record CSV header line (no trailing newline).
const std::string& record_header();

/// Column name -> position, built from a header line. Only the canonical
/// 204-column layout is accepted.
class ColumnMap {
public:
    static ColumnMap canonical();
    static ColumnMap from_header(std::string_view header_line);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

/// Splits one CSV line into fields. Handles double-quoted cells.
std::vector<std::string> split_csv_line(std::string_view line);

FrameRecord parse_record(std::string_view row, const ColumnMap& header = ColumnMap::canonical());
std::string serialize_record(const FrameRecord& rec);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct Dataset {
    std::vector<VideoSequence> videos;
    SignRegistry registry;
};

SignRegistry load_registry(const std::filesystem::path& path);
SignRegistry registry_from_json(const nlohmann::json& doc);
nlohmann::json registry_to_json(const SignRegistry& registry);
void save_registry(const SignRegistry& registry, const std::filesystem::path& path);

/// Reads record CSVs plus the sign registry.
///
/// `path` is either a directory (every *.csv in name order, registry in
/// signs.json) or a single CSV file (registry in signs.json next to it).
/// Rows are grouped by video_id in order of first appearance; ids need not
/// be contiguous.
Dataset load_dataset(const std::filesystem::path& path);

/// Groups records into videos, checking fps homogeneity and sign ids.
std::vector<VideoSequence> group_records(std::vector<FrameRecord> records,
                                         const SignRegistry& registry);

/// Writes records.csv and signs.json into `dir` (created if needed).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace slr
