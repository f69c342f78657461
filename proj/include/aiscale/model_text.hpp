// Copyright 2026 The aiscale Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-oriented model text format. Grammar (one record per line, '#' starts a
// comment, fields are space separated, op fields are key=value):
//
//   aiscale-model 1
//   name <identifier>
//   input <C>x<D>x<H>x<W>
//   width <C>
//   reductions <i> <j> ...            (1-based cell positions, may be empty)
//   head-input flatten|global_average
//   stem <op>                         (repeated, in order)
//   cell nodes=<n> reduction=<0|1> channels=<C> epilogue=<0|1>
//   edge <from> <to> <op>             (repeated, belongs to the open cell)
//   endcell
//   head <op>                         (repeated, in order)
//   end
//
//   <op> := <kind> [k=<kernel>] [s=<stride>] [d=<dilation>] [out=<C>] [bias=<0|1>]
//
// Keys with default values (k=0, s=1, d=1, out=0, bias=0) are omitted on write.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aiscale/arch_ir.hpp"
#include "aiscale/error.hpp"

namespace aiscale::arch {

inline std::string op_to_text(const OpSpec& op) {
  std::string out(to_string(op.kind));
  if (op.kernel != 0) out += " k=" + std::to_string(op.kernel);
  if (op.stride != 1) out += " s=" + std::to_string(op.stride);
  if (op.dilation != 1) out += " d=" + std::to_string(op.dilation);
  if (op.out_channels != 0) out += " out=" + std::to_string(op.out_channels);
  if (op.bias) out += " bias=1";
  return out;
}

inline std::string to_text(const ModelSpec& m) {
  std::ostringstream os;
  os << "aiscale-model 1\n";
  if (!m.name.empty()) os << "name " << m.name << "\n";
  os << "input " << m.input.str() << "\n";
  os << "width " << m.channel_width << "\n";
  os << "reductions";
  for (int r : m.reduction_positions) os << ' ' << r;
  os << "\n";
  os << "head-input " << to_string(m.head_input) << "\n";
  for (const auto& op : m.stem) os << "stem " << op_to_text(op) << "\n";
  for (const auto& cell : m.cells) {
    os << "cell nodes=" << cell.node_count << " reduction=" << (cell.is_reduction ? 1 : 0)
       << " channels=" << cell.channels << " epilogue=" << (cell.conv_epilogue ? 1 : 0) << "\n";
    for (const auto& e : cell.edges) {
      os << "edge " << e.from << ' ' << e.to << ' ' << op_to_text(e.op) << "\n";
    }
    os << "endcell\n";
  }
  for (const auto& op : m.head) os << "head " << op_to_text(op) << "\n";
  os << "end\n";
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

[[noreturn]] inline void parse_fail(std::size_t line_no, const std::string& msg) {
  fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + msg);
}

inline long long parse_int(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size()) parse_fail(line_no, "bad integer '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    parse_fail(line_no, "bad integer '" + text + "'");
  }
}

inline std::pair<std::string, std::string> split_kv(const std::string& token, std::size_t line_no) {
  auto eq = token.find('=');
  if (eq == std::string::npos) parse_fail(line_no, "expected key=value, got '" + token + "'");
  return {token.substr(0, eq), token.substr(eq + 1)};
}

inline OpSpec parse_op(const std::vector<std::string>& tokens, std::size_t first,
                       std::size_t line_no) {
  if (first >= tokens.size()) parse_fail(line_no, "missing op kind");
  auto kind = parse_op_kind(tokens[first]);
  if (!kind) parse_fail(line_no, "unknown op '" + tokens[first] + "'");
  OpSpec op;
  op.kind = *kind;
  for (std::size_t i = first + 1; i < tokens.size(); ++i) {
    auto [key, value] = split_kv(tokens[i], line_no);
    const long long v = parse_int(value, line_no);
    if (key == "k") {
      op.kernel = static_cast<int>(v);
    } else if (key == "s") {
      op.stride = static_cast<int>(v);
    } else if (key == "d") {
      op.dilation = static_cast<int>(v);
    } else if (key == "out") {
      if (v < 0) parse_fail(line_no, "negative out");
      op.out_channels = static_cast<Count>(v);
    } else if (key == "bias") {
      op.bias = v != 0;
    } else {
      parse_fail(line_no, "unknown op field '" + key + "'");
    }
  }
  return op;
}

}  // namespace detail

inline ModelSpec parse_model(std::string_view text) {
  ModelSpec m;
  m.input = TensorShape{};
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = false, ended = false;
  CellSpec* open_cell = nullptr;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (ended) detail::parse_fail(line_no, "content after 'end'");
    const std::string& kw = tok[0];
    if (!header) {
      if (kw != "aiscale-model") detail::parse_fail(line_no, "missing 'aiscale-model' header");
      if (tok.size() != 2 || tok[1] != "1") {
        fail(ErrorKind::VersionUnsupported, "model text version '" +
                                                (tok.size() > 1 ? tok[1] : std::string()) + "'");
      }
      header = true;
      continue;
    }
    if (open_cell && kw != "edge" && kw != "endcell") {
      detail::parse_fail(line_no, "expected 'edge' or 'endcell'");
    }
    if (kw == "name") {
      if (tok.size() != 2) detail::parse_fail(line_no, "name takes one token");
      m.name = tok[1];
    } else if (kw == "input") {
      if (tok.size() != 2) detail::parse_fail(line_no, "input takes one shape");
      m.input = TensorShape::parse(tok[1]);
    } else if (kw == "width") {
      if (tok.size() != 2) detail::parse_fail(line_no, "width takes one value");
      m.channel_width = static_cast<Count>(detail::parse_int(tok[1], line_no));
    } else if (kw == "reductions") {
      for (std::size_t i = 1; i < tok.size(); ++i) {
        m.reduction_positions.insert(static_cast<int>(detail::parse_int(tok[i], line_no)));
      }
    } else if (kw == "head-input") {
      if (tok.size() != 2) detail::parse_fail(line_no, "head-input takes one value");
      if (tok[1] == "flatten") {
        m.head_input = HeadInput::flatten;
      } else if (tok[1] == "global_average") {
        m.head_input = HeadInput::global_average;
      } else {
        detail::parse_fail(line_no, "unknown head-input '" + tok[1] + "'");
      }
    } else if (kw == "stem") {
      m.stem.push_back(detail::parse_op(tok, 1, line_no));
    } else if (kw == "head") {
      m.head.push_back(detail::parse_op(tok, 1, line_no));
    } else if (kw == "cell") {
      CellSpec cell;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        auto [key, value] = detail::split_kv(tok[i], line_no);
        const long long v = detail::parse_int(value, line_no);
        if (key == "nodes") {
          cell.node_count = static_cast<int>(v);
        } else if (key == "reduction") {
          cell.is_reduction = v != 0;
        } else if (key == "channels") {
          cell.channels = static_cast<Count>(v);
        } else if (key == "epilogue") {
          cell.conv_epilogue = v != 0;
        } else {
          detail::parse_fail(line_no, "unknown cell field '" + key + "'");
        }
      }
      m.cells.push_back(std::move(cell));
      open_cell = &m.cells.back();
    } else if (kw == "edge") {
      if (!open_cell) detail::parse_fail(line_no, "'edge' outside a cell");
      if (tok.size() < 4) detail::parse_fail(line_no, "edge needs <from> <to> <op>");
      CellEdge e;
      e.from = static_cast<int>(detail::parse_int(tok[1], line_no));
      e.to = static_cast<int>(detail::parse_int(tok[2], line_no));
      e.op = detail::parse_op(tok, 3, line_no);
      open_cell->edges.push_back(e);
    } else if (kw == "endcell") {
      if (!open_cell) detail::parse_fail(line_no, "'endcell' without 'cell'");
      open_cell = nullptr;
    } else if (kw == "end") {
      ended = true;
    } else {
      detail::parse_fail(line_no, "unknown record '" + kw + "'");
    }
  }
  if (!header) fail(ErrorKind::ParseError, "empty model text");
  if (open_cell) fail(ErrorKind::ParseError, "unterminated cell");
  if (!ended) fail(ErrorKind::ParseError, "missing 'end'");
  return m;
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

inline void save_model(const ModelSpec& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << to_text(model);
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

}  // namespace aiscale::arch
