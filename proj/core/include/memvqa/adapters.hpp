#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memvqa/dataset.hpp"

namespace memvqa {

class KeyValues;

/// Where a dataset keeps its per-frame QA files and images, relative to its root.
/// `{video}` and `{frame}` are substituted; every QA file is named `<frame><qa_suffix>`
/// and holds one `question|answer[|extra...]` record per line (extra fields such as
/// bounding boxes are ignored).
struct DatasetLayout {
    std::string qa_dir;
    std::string qa_suffix;
    std::string image;

    static DatasetLayout defaults_for(DatasetId id);
};

struct DatasetSource {
    DatasetId dataset = DatasetId::EndoVis18;
    std::filesystem::path root;
    DatasetLayout layout;
    /// Video ids per split. An empty list means every video directory found under root.
    std::map<Split, std::vector<std::string>> split_videos;

    /// Reads `<dataset>.root`, `<dataset>.train`, `<dataset>.test`, `<dataset>.qa_dir`,
    /// `<dataset>.qa_suffix` and `<dataset>.image` keys. Throws ConfigError when root is missing.
    static DatasetSource from_config(const KeyValues& config, DatasetId id);
};

/// Ingests one split through the dataset's native layout.
/// Errors: FileLayoutError (missing root, video or empty annotation directory),
/// RecordError (unparseable line, with file and line), LabelError (answer outside vocabulary).
SampleSet load_dataset(const DatasetSource& source, Split split);

}  // namespace memvqa
