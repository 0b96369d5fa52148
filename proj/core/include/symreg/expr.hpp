#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "symreg/token.hpp"

namespace symreg {

enum class ChildSlot : std::uint8_t { Root, Left, Right };

struct ExprNode {
  int token_id = -1;
  int parent = -1;               // index into nodes, -1 for the root
  ChildSlot slot = ChildSlot::Root;
  int depth = 0;                 // root has depth 1
  double horizontal = 0.0;       // in (0,1), root has 1/2
};

// Expression tree stored in BFS order: level by level, left to right.
// Every non-root node's parent precedes it.
struct ExprTree {
  std::vector<ExprNode> nodes;
  bool complete = false;

  int node_count() const { return static_cast<int>(nodes.size()); }

  // Rebuilds a complete tree from a BFS token-id sequence.
  // Throws StructuralError if the sequence does not close into exactly one tree.
  static ExprTree from_tokens(std::span<const int> token_ids, const TokenLibrary& lib);
};

// A tree plus values for its constant tokens (BFS order of occurrence).
struct Expression {
  ExprTree tree;
  std::vector<double> constants;
};

// Recomputes depth / horizontal position for every node from the parent
// links: root gets (1, 1/2); a child at depth d gets parent.h -/+ 1/2^d for
// the left/right slot. Validates structure (parent precedes child, slots
// consistent with arity) and throws StructuralError on violations.
void assign_positions(ExprTree& tree, const TokenLibrary& lib);

// Node count plus constant-token count.
int complexity(const TokenLibrary& lib, const Expression& expr);
int complexity(const TokenLibrary& lib, const ExprTree& tree);

// Number of constant tokens in the tree.
int count_constants(const TokenLibrary& lib, const ExprTree& tree);

// Incremental BFS construction, one token at a time. Maintains positions and
// the open-slot frontier, so the next slot's (depth, horizontal) is known
// before its token is chosen.
class BfsBuilder {
 public:
  explicit BfsBuilder(const TokenLibrary& lib) : lib_(&lib) {}

  bool complete() const { return started_ && open_.empty(); }
  bool started() const { return started_; }
  int open_slots() const { return static_cast<int>(open_.size()); }
  int node_count() const { return tree_.node_count(); }

  // Context of the slot that the next push() fills.
  int next_depth() const;
  double next_horizontal() const;
  int next_parent() const;           // node index, -1 at the root
  ChildSlot next_slot() const;
  int parent_token() const;          // token id of the parent, -1 at the root
  // Token id of an already-filled left sibling (only for a Right slot), -1 otherwise.
  int sibling_token() const;

  // Appends a node into the next open slot.
  void push(int token_id);

  // Finished tree; only valid when complete().
  ExprTree take();
  const ExprTree& tree() const { return tree_; }

 private:
  struct Pending {
    int parent;
    ChildSlot slot;
  };
  const TokenLibrary* lib_;
  ExprTree tree_;
  std::deque<Pending> open_;
  bool started_ = false;
};

}  // namespace symreg
