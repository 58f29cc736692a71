#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "pism/types.hpp"

namespace pism {

enum class TraceFormat { Csv, Jsonl };

std::optional<TraceFormat> parse_trace_format(std::string_view text);

// Trace directory layout:
//   jobs.<ext>      job_id, job_type, submission_time, dag
//   tasks.<ext>     task_id, job_id, operation_label, instance_count, cpu, mem, makespan
//   topology.<ext>  record per server, LCS placement and the horizon
// with <ext> = csv or jsonl.
//
// DAG string: "<id>:<Label>;<id>:<Label>|<from>><to>;<from>><to>".
Trace load_trace(const std::filesystem::path& dir, TraceFormat format);
void save_trace(const Trace& trace, const std::filesystem::path& dir, TraceFormat format);

std::string encode_dag(const Dag& dag);
Dag decode_dag(std::string_view text);

}  // namespace pism
