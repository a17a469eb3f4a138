#pragma once

#include <string>
#include <vector>

#include "cjt/planner.hpp"

namespace cjt {

struct SqlNaming {
  /// Prefix of message tables; names are <prefix><from>_<to>_<32 hex>.
  std::string prefix = "m_";
};

/// Annotation columns carried by every table: cnt, val, or g_i_j (i <= j).
std::vector<std::string> annotation_columns(const SemiringSpec& spec);

/// Base table of a relation version: the name itself for the current
/// version, <name>__<version> otherwise.
std::string relation_table(const JoinGraph& g, const std::string& relation, const std::string& version);

std::string message_table(const AnnotatedTree& tree, DirectedEdge e, const SqlNaming& naming = {});

/// Whether the message along `e` is the implicit identity (no table).
bool is_identity_message(const AnnotatedTree& tree, DirectedEdge e);

/// CREATE TABLE ... AS SELECT computing the message; empty for identity
/// messages.
std::string emit_message_sql(const AnnotatedTree& tree, DirectedEdge e, const SqlNaming& naming = {});

/// SELECT of the query answer from the absorption at `root`.
std::string emit_absorption_sql(const AnnotatedTree& tree, BagId root, const SqlNaming& naming = {});

/// Scheduled messages in order, then the absorption.
std::vector<std::string> emit_plan_sql(const AnnotatedTree& tree, const SteinerPlan& plan,
                                       const SqlNaming& naming = {});

/// One SELECT joining every active relation.
std::string emit_naive_sql(const JoinGraph& g, const QuerySpec& q);

/// CREATE TABLE plus INSERT statements reproducing a relation.
std::string emit_table_sql(const std::string& table, const AnnotatedRelation& r, const Dictionary& dict);

/// CREATE/INSERT for every relation version of the graph.
std::string emit_graph_tables_sql(const JoinGraph& g);

std::string join_statements(const std::vector<std::string>& statements);

}  // namespace cjt
