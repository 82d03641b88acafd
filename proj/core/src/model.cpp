#include "deskdta/model.hpp"

#include <utility>

#include "deskdta/common.hpp"
#include "deskdta/graph.hpp"
#include "deskdta/metrics.hpp"

namespace dta {

DrugInput make_drug_input(const std::string& id, const std::string& smiles_text) {
  MolGraph mol = parse_smiles(smiles_text);
  std::vector<Edge> edges = molecule_edges(mol);
  DrugInput out;
  out.id = id;
  out.adj = normalized_adjacency(static_cast<int64_t>(mol.atoms.size()), edges);
  out.features = featurize_atoms(mol);
  return out;
}

TargetInput make_target_input(const std::string& id, const std::string& sequence,
                              const ContactMap* map, const ProteinGraphConfig& cfg) {
  ProteinGraph g = build_protein_graph(sequence, map, cfg);
  TargetInput out;
  out.id = id;
  out.adj = normalized_adjacency(static_cast<int64_t>(g.residues.size()), g.edges);
  out.features = featurize_residues(g);
  out.tokens = g.tokens;
  return out;
}

Model::Model(const TrainConfig& cfg, AffinityGraph graph)
    : cfg_(cfg), graph_(std::move(graph)) {
  if (!cfg_.gcn)
    fail(ErrorKind::Config, "the molecular graph encoder cannot be disabled");
  const int64_t d = cfg_.embed_dim;
  if (d < 4 || d % 4 != 0)
    fail(ErrorKind::Config, "embed_dim must be a positive multiple of 4, got " +
                                std::to_string(d));
  const uint64_t seed = cfg_.seed;

  node_embed_ = uniform_init({graph_.n_nodes(), d}, 0.05, seed, "affinity.node_embed");
  aff_w_.w0_pos = glorot_uniform(d, d, seed, "affinity.pos.w0");
  aff_w_.w1_pos = glorot_uniform(d, d, seed, "affinity.pos.w1");
  aff_w_.w0_neg = glorot_uniform(d, d, seed, "affinity.neg.w0");
  aff_w_.w1_neg = glorot_uniform(d, d, seed, "affinity.neg.w1");

  drug_gcn_.weights = {glorot_uniform(kAtomFeatureDim, d, seed, "drug_gcn.w0"),
                       glorot_uniform(d, d, seed, "drug_gcn.w1"),
                       glorot_uniform(d, d, seed, "drug_gcn.w2")};

  protein_w0_ = glorot_uniform(kResidueFeatureDim, d, seed, "protein_gcn.w0");
  protein_w1_ = glorot_uniform(2 * d, d, seed, "protein_gcn.w1");
  protein_w2_ = glorot_uniform(d, d, seed, "protein_gcn.w2");
  fusion_w_ = glorot_uniform(d, d, seed, "fusion.w");

  if (cfg_.trans)
    transformer_ = TransformerEncoder(kProteinVocab, d, 2, 4, cfg_.max_seq_len, seed,
                                      "transformer");

  project_ = ProjectionHeads::make(d, cfg_.trans, seed);
  prompt_gen_ = PromptGenerator::make(d, seed);
  head_ = AffinityHead::make(d, seed, cfg_.dropout);

  params_.push_back({"affinity.node_embed", node_embed_});
  params_.push_back({"affinity.pos.w0", aff_w_.w0_pos});
  params_.push_back({"affinity.pos.w1", aff_w_.w1_pos});
  params_.push_back({"affinity.neg.w0", aff_w_.w0_neg});
  params_.push_back({"affinity.neg.w1", aff_w_.w1_neg});
  params_.push_back({"drug_gcn.w0", drug_gcn_.weights[0]});
  params_.push_back({"drug_gcn.w1", drug_gcn_.weights[1]});
  params_.push_back({"drug_gcn.w2", drug_gcn_.weights[2]});
  params_.push_back({"protein_gcn.w0", protein_w0_});
  params_.push_back({"protein_gcn.w1", protein_w1_});
  params_.push_back({"protein_gcn.w2", protein_w2_});
  params_.push_back({"fusion.w", fusion_w_});
  if (cfg_.trans) {
    params_.push_back({"transformer.token_embed", transformer_.token_embed});
    for (size_t b = 0; b < transformer_.blocks.size(); ++b) {
      TransformerBlock& blk = transformer_.blocks[b];
      std::string pre = "transformer.block" + std::to_string(b) + ".";
      params_.push_back({pre + "wq", blk.wq});
      params_.push_back({pre + "wk", blk.wk});
      params_.push_back({pre + "wv", blk.wv});
      params_.push_back({pre + "wo", blk.wo});
      params_.push_back({pre + "ff1", blk.ff1});
      params_.push_back({pre + "ff1_b", blk.ff1_b});
      params_.push_back({pre + "ff2", blk.ff2});
      params_.push_back({pre + "ff2_b", blk.ff2_b});
      params_.push_back({pre + "ln1_g", blk.ln1_g});
      params_.push_back({pre + "ln1_b", blk.ln1_b});
      params_.push_back({pre + "ln2_g", blk.ln2_g});
      params_.push_back({pre + "ln2_b", blk.ln2_b});
    }
  }
  params_.push_back({"project.w_d", project_.w_d});
  params_.push_back({"project.b_d", project_.b_d});
  params_.push_back({"project.w_t", project_.w_t});
  params_.push_back({"project.b_t", project_.b_t});
  params_.push_back({"prompt.drug.w1", prompt_gen_.w1_d});
  params_.push_back({"prompt.drug.b1", prompt_gen_.b1_d});
  params_.push_back({"prompt.drug.w2", prompt_gen_.w2_d});
  params_.push_back({"prompt.drug.b2", prompt_gen_.b2_d});
  params_.push_back({"prompt.target.w1", prompt_gen_.w1_t});
  params_.push_back({"prompt.target.b1", prompt_gen_.b1_t});
  params_.push_back({"prompt.target.w2", prompt_gen_.w2_t});
  params_.push_back({"prompt.target.b2", prompt_gen_.b2_t});
  params_.push_back({"prompt.pair.w1", prompt_gen_.w1_p});
  params_.push_back({"prompt.pair.b1", prompt_gen_.b1_p});
  params_.push_back({"prompt.pair.w2", prompt_gen_.w2_p});
  params_.push_back({"prompt.pair.b2", prompt_gen_.b2_p});
  params_.push_back({"head.w1", head_.w1});
  params_.push_back({"head.b1", head_.b1});
  params_.push_back({"head.w2", head_.w2});
  params_.push_back({"head.b2", head_.b2});
  params_.push_back({"head.w3", head_.w3});
  params_.push_back({"head.b3", head_.b3});
}

Model::StepCtx Model::begin_step(Tape& tape, bool training, uint64_t step) {
  StepCtx ctx;
  ctx.tape = &tape;
  ctx.training = training;
  ctx.dropout = DropoutCtx{training && cfg_.dropout > 0.0, cfg_.seed, step, 0};
  auto [pos, neg] = encode_affinity(tape, graph_, node_embed_, aff_w_);
  ctx.aff_pos = pos;
  ctx.aff_neg = neg;
  return ctx;
}

Model::PairOutput Model::forward_pair(StepCtx& ctx, const DrugInput& drug,
                                      const TargetInput& target) {
  if (!ctx.tape) fail(ErrorKind::Contract, "forward_pair needs a step context");
  Tape& tape = *ctx.tape;
  const int64_t d = cfg_.embed_dim;
  PairOutput out;

  auto dnode = graph_.drug_node(drug.id);
  out.cold_drug = !dnode.has_value();
  Tensor d_pos = dnode ? tape.select_row(ctx.aff_pos, *dnode) : Tensor::zeros({d});
  Tensor d_neg = dnode ? tape.select_row(ctx.aff_neg, *dnode) : Tensor::zeros({d});

  auto tnode = graph_.target_node(target.id);
  out.cold_target = !tnode.has_value();
  Tensor t_pos = tnode ? tape.select_row(ctx.aff_pos, *tnode) : Tensor::zeros({d});
  Tensor t_neg = tnode ? tape.select_row(ctx.aff_neg, *tnode) : Tensor::zeros({d});

  Tensor h_mol_d;
  if (auto it = ctx.drug_cache.find(drug.id); it != ctx.drug_cache.end()) {
    h_mol_d = it->second;
  } else {
    h_mol_d = gmp_readout(tape, gcn_forward(tape, drug.adj, drug.features, drug_gcn_));
    ctx.drug_cache.emplace(drug.id, h_mol_d);
  }

  Tensor h_prot;
  if (auto it = ctx.protein_cache.find(target.id); it != ctx.protein_cache.end()) {
    h_prot = it->second;
  } else {
    Tensor h = gcn_layer(tape, target.adj, target.features, protein_w0_);
    Tensor fused = fuse_affinity_into_protein(tape, h, t_pos, fusion_w_);
    h = gcn_layer(tape, target.adj, fused, protein_w1_);
    h = gcn_layer(tape, target.adj, h, protein_w2_);
    h_prot = gmp_readout(tape, h);
    ctx.protein_cache.emplace(target.id, h_prot);
  }

  Tensor drug_view = tape.concat_cols({h_mol_d, d_pos, d_neg});
  Tensor target_view;
  if (cfg_.trans) {
    Tensor h_seq;
    if (auto it = ctx.sequence_cache.find(target.id); it != ctx.sequence_cache.end()) {
      h_seq = it->second;
    } else {
      h_seq = transformer_forward(tape, transformer_, target.tokens);
      ctx.sequence_cache.emplace(target.id, h_seq);
    }
    target_view = tape.concat_cols({h_prot, t_pos, t_neg, h_seq});
  } else {
    target_view = tape.concat_cols({h_prot, t_pos, t_neg});
  }

  Tensor z_d = project_drug(tape, project_, drug_view);
  Tensor z_t = project_target(tape, project_, target_view);

  if (cfg_.dp && !force_zero_prompts_) {
    out.prompts = generate_prompts(tape, prompt_gen_, z_d, z_t);
  } else {
    if (cfg_.dp) generate_prompts(tape, prompt_gen_, z_d, z_t);  // recorded, discarded
    out.prompts = zero_prompts(d);
  }
  out.z = integrate_prompts(tape, z_d, z_t, out.prompts);
  out.pred = predict_affinity(tape, head_, out.z, ctx.dropout);
  return out;
}

std::vector<std::string> zero_grad_params(std::span<const AdamParam> params) {
  std::vector<std::string> dead;
  for (const AdamParam& p : params) {
    if (!p.tensor.has_grad()) {
      dead.push_back(p.name);
      continue;
    }
    bool all_zero = true;
    for (double g : p.tensor.grad())
      if (g != 0.0) {
        all_zero = false;
        break;
      }
    if (all_zero) dead.push_back(p.name);
  }
  return dead;
}

GradCheckReport full_model_grad_check(const DtaDataset& ds, const TrainConfig& cfg,
                                      int64_t stride) {
  std::vector<AffinityTriple> triples;
  for (const Sample& s : ds.samples)
    if (!s.test)
      triples.push_back({ds.drug_ids[static_cast<size_t>(s.drug)],
                         ds.target_ids[static_cast<size_t>(s.target)], s.affinity});
  Model model(cfg, AffinityGraph::build(ds.drug_ids, ds.target_ids, triples, cfg.threshold_p));

  ProteinGraphConfig pg;
  pg.threshold = cfg.contact_threshold;
  pg.contact_at_least = cfg.contact_at_least;
  pg.window = cfg.window;
  pg.max_seq_len = cfg.max_seq_len;
  std::vector<DrugInput> drugs;
  std::vector<TargetInput> targets;
  for (size_t i = 0; i < ds.drug_ids.size(); ++i)
    drugs.push_back(make_drug_input(ds.drug_ids[i], ds.smiles[i]));
  for (size_t i = 0; i < ds.target_ids.size(); ++i)
    targets.push_back(make_target_input(ds.target_ids[i], ds.sequences[i], nullptr, pg));

  Tensor labels = Tensor::zeros({static_cast<int64_t>(ds.samples.size())});
  for (size_t i = 0; i < ds.samples.size(); ++i)
    labels.at(static_cast<int64_t>(i)) = ds.samples[i].affinity;

  auto forward = [&](Tape& tape) {
    Model::StepCtx ctx = model.begin_step(tape, true, 1);
    std::vector<Tensor> preds;
    std::vector<Prompts> prompts;
    for (const Sample& s : ds.samples) {
      auto out = model.forward_pair(ctx, drugs[static_cast<size_t>(s.drug)],
                                    targets[static_cast<size_t>(s.target)]);
      preds.push_back(out.pred);
      prompts.push_back(out.prompts);
    }
    return total_loss(tape, mse_loss(tape, tape.concat_cols(preds), labels),
                      prompt_loss(tape, prompts), cfg.alpha);
  };

  std::vector<GradCheckParam> params;
  for (const AdamParam& p : model.params()) params.push_back({p.name, p.tensor});
  GradCheckOptions opts;
  opts.stride = stride;
  return grad_check_params(params, forward, opts);
}

}  // namespace dta
