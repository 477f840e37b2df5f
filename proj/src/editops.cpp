#include "gectune/editops.hpp"

#include <algorithm>

namespace gectune {

char op_symbol(OpKind kind) {
  switch (kind) {
    case OpKind::Match: return 'M';
    case OpKind::Subst: return 'S';
    case OpKind::Ins: return 'I';
    case OpKind::Del: return 'D';
  }
  return '?';
}

std::vector<std::size_t> lev_table(const Tokens& src, const Tokens& tgt) {
  const std::size_t n = src.size(), m = tgt.size(), w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    d[i * w] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t diag = d[(i - 1) * w + j - 1] + (src[i - 1] == tgt[j - 1] ? 0 : 1);
      std::size_t up = d[(i - 1) * w + j] + 1;
      std::size_t left = d[i * w + j - 1] + 1;
      d[i * w + j] = std::min({diag, up, left});
    }
  }
  return d;
}

Alignment lev_align(const Tokens& src, const Tokens& tgt) {
  const std::size_t m = tgt.size(), w = m + 1;
  const auto d = lev_table(src, tgt);
  Alignment out;
  std::size_t i = src.size(), j = m;
  out.distance = d[i * w + j];
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0 && src[i - 1] == tgt[j - 1] && d[(i - 1) * w + j - 1] == here) {
      out.path.push_back({OpKind::Match, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && d[(i - 1) * w + j] + 1 == here) {
      out.path.push_back({OpKind::Del, i - 1, std::nullopt});
      --i;
    } else if (j > 0 && d[i * w + j - 1] + 1 == here) {
      out.path.push_back({OpKind::Ins, std::nullopt, j - 1});
      --j;
    } else {
      out.path.push_back({OpKind::Subst, i - 1, j - 1});
      --i, --j;
    }
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

EditCounts edit_op_counts(const std::vector<AlignOp>& path) {
  EditCounts c;
  for (const auto& op : path) {
    switch (op.kind) {
      case OpKind::Match: break;
      case OpKind::Subst: ++c.s; break;
      case OpKind::Ins: ++c.i; break;
      case OpKind::Del: ++c.d; break;
    }
  }
  c.ld = c.d + c.i + c.s;
  return c;
}

EditCounts edit_op_counts(const Tokens& src, const Tokens& tgt) { return edit_op_counts(lev_align(src, tgt).path); }

EditSet extract_edits(const Tokens& src, const Tokens& tgt) {
  const auto path = lev_align(src, tgt).path;
  EditSet edits;
  std::size_t src_pos = 0;  // source tokens consumed so far
  bool open = false;
  for (const auto& op : path) {
    if (op.kind == OpKind::Match) {
      open = false;
      ++src_pos;
      continue;
    }
    if (!open) {
      edits.push_back(Edit{src_pos, src_pos, {}, {}});
      open = true;
    }
    Edit& e = edits.back();
    if (op.kind != OpKind::Ins) {
      ++src_pos;
      e.end = src_pos;
    }
    if (op.kind != OpKind::Del) e.replacement.push_back(tgt[*op.tgt]);
  }
  return edits;
}

std::vector<AlignOp> atomic_edits(const Tokens& src, const Tokens& tgt) {
  auto path = lev_align(src, tgt).path;
  std::erase_if(path, [](const AlignOp& op) { return op.kind == OpKind::Match; });
  return path;
}

Tokens op_sequence(const std::vector<AlignOp>& path, const Tokens& src, const Tokens& tgt, OpAlphabet alphabet) {
  Tokens ops;
  ops.reserve(path.size());
  for (const auto& op : path) {
    std::string sym(1, op_symbol(op.kind));
    if (alphabet == OpAlphabet::Lexicalized && op.kind != OpKind::Match) {
      sym += '_';
      sym += op.kind == OpKind::Del ? src[*op.src] : tgt[*op.tgt];
    }
    ops.push_back(std::move(sym));
  }
  return ops;
}

Tokens op_sequence(const Tokens& src, const Tokens& tgt, OpAlphabet alphabet) {
  return op_sequence(lev_align(src, tgt).path, src, tgt, alphabet);
}

}  // namespace gectune
