// tq: data-oblivious vector quantization for 3DGS scenes, KV tensors, and
// grouped feature tables. Every output is a pure function of the inputs and
// the --seed flag; nothing is learned from the data.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "tq/eval.hpp"
#include "tq/gsplat.hpp"
#include "tq/io.hpp"
#include "tq/quantizer.hpp"
#include "tq/rng.hpp"
#include "tq/tensors.hpp"

namespace {

using nlohmann::ordered_json;

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        tq::write_file_atomic(out_path, text);
    }
}

tq::TensorFile load_tensor(const std::string& path) {
    return tq::read_tensor(tq::read_file(path));
}

Eigen::MatrixXd to_matrix(const tq::TensorFile& t) {
    Eigen::MatrixXd m(t.rows(), t.row_dim());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = t.data[static_cast<std::size_t>(i) * t.row_dim() + j];
        }
    }
    return m;
}

struct AttnArgs {
    int dim = 1024;
    int rows = 64;
    int keys = 0; // 0: same as rows
    int bits = 4;
    uint64_t seed = 0;
    int head_dim = 64;
    std::string q_path, k_path, v_path;
    std::string format = "json";
    std::string out;
};

// Synthetic activations: i.i.d. normal entries with variance 1/dim, so rows
// sit near the unit sphere like normalized embeddings do.
Eigen::MatrixXd synth_activations(int rows, int dim, uint64_t seed, uint64_t stream) {
    tq::PhiloxRng rng(seed, stream);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    Eigen::MatrixXd m(rows, dim);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < dim; ++j) m(i, j) = rng.next_gaussian() * scale;
    }
    return m;
}

int run_attn_eval(const AttnArgs& a) {
    Eigen::MatrixXd q, k, v;
    int dim = a.dim;
    int rows = a.rows;
    int keys = a.keys > 0 ? a.keys : a.rows;
    if (!a.q_path.empty()) {
        q = to_matrix(load_tensor(a.q_path));
        k = to_matrix(load_tensor(a.k_path));
        v = to_matrix(load_tensor(a.v_path));
        dim = static_cast<int>(q.cols());
        rows = static_cast<int>(q.rows());
        keys = static_cast<int>(k.rows());
    } else {
        q = synth_activations(rows, dim, a.seed, 101);
        k = synth_activations(keys, dim, a.seed, 102);
        v = synth_activations(keys, dim, a.seed, 103);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(a.head_dim));
    tq::AttentionMetrics m = tq::attention_error(q, k, v, a.bits, a.seed, scale);

    std::string text;
    if (a.format == "json") {
        ordered_json obj;
        obj["dim"] = dim;
        obj["rows"] = rows;
        obj["keys"] = keys;
        obj["bits"] = a.bits;
        obj["seed"] = a.seed;
        obj["head_dim"] = a.head_dim;
        obj["output_mse"] = m.output_mse;
        obj["k_row_rel_mse"] = m.k_row_rel_mse;
        obj["v_row_rel_mse"] = m.v_row_rel_mse;
        obj["kv_ratio"] = m.kv_ratio;
        text = obj.dump(2) + "\n";
    } else if (a.format == "csv") {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "dim,rows,keys,bits,seed,head_dim,output_mse,k_row_rel_mse,"
                      "v_row_rel_mse,kv_ratio\n%d,%d,%d,%d,%llu,%d,%.17g,%.17g,%.17g,"
                      "%.17g\n",
                      dim, rows, keys, a.bits,
                      static_cast<unsigned long long>(a.seed), a.head_dim, m.output_mse,
                      m.k_row_rel_mse, m.v_row_rel_mse, m.kv_ratio);
        text = buf;
    } else {
        throw tq::UsageError("unknown format '" + a.format + "'");
    }
    emit_text(text, a.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-oblivious vector quantization toolkit"};
    app.require_subcommand(1);

    // codebook
    auto* cmd_cb = app.add_subcommand("codebook", "solve and write a TQCB codebook");
    int cb_dim = 45, cb_bits = 3;
    std::string cb_out;
    cmd_cb->add_option("--dim", cb_dim, "vector dimension")->required();
    cmd_cb->add_option("--bits", cb_bits, "bits per coordinate (1-8)");
    cmd_cb->add_option("--out", cb_out, "output .tqcb path")->required();

    // compress-gs
    auto* cmd_cgs = app.add_subcommand("compress-gs", "compress a 3DGS PLY into a TQ3D container");
    std::string cgs_in, cgs_out;
    int cgs_bits = 3;
    uint64_t cgs_seed = 0;
    std::optional<double> cgs_prune;
    std::optional<int> cgs_degree;
    bool cgs_embed = false;
    cmd_cgs->add_option("input", cgs_in, "input .ply")->required();
    cmd_cgs->add_option("--bits", cgs_bits, "bits per SH coordinate (1-8)");
    cmd_cgs->add_option("--seed", cgs_seed, "rotation seed");
    cmd_cgs->add_option("--prune-opacity", cgs_prune, "drop records with sigmoid(opacity) below this");
    cmd_cgs->add_option("--sh-degree", cgs_degree, "truncate SH rest to this degree first");
    cmd_cgs->add_flag("--embed-rotation", cgs_embed, "store the rotation matrix in the container");
    cmd_cgs->add_option("--out", cgs_out, "output .tq3d path")->required();

    // decompress-gs
    auto* cmd_dgs = app.add_subcommand("decompress-gs", "reconstruct a PLY from a TQ3D container");
    std::string dgs_in, dgs_out;
    cmd_dgs->add_option("input", dgs_in, "input .tq3d")->required();
    cmd_dgs->add_option("--out", dgs_out, "output .ply path")->required();

    // prune-gs
    auto* cmd_pgs = app.add_subcommand("prune-gs", "opacity pruning and/or SH degree reduction");
    std::string pgs_in, pgs_out;
    std::optional<double> pgs_prune;
    std::optional<int> pgs_degree;
    cmd_pgs->add_option("input", pgs_in, "input .ply")->required();
    cmd_pgs->add_option("--prune-opacity", pgs_prune, "drop records with sigmoid(opacity) below this");
    cmd_pgs->add_option("--sh-degree", pgs_degree, "truncate SH rest to this degree");
    cmd_pgs->add_option("--out", pgs_out, "output .ply path")->required();

    // compress-tensor
    auto* cmd_ct = app.add_subcommand("compress-tensor", "compress a TQTN tensor into a TQKV container");
    std::string ct_in, ct_out;
    int ct_bits = 4, ct_group = 16;
    uint64_t ct_seed = 0;
    cmd_ct->add_option("input", ct_in, "input .tqtn")->required();
    cmd_ct->add_option("--bits", ct_bits, "bits per coordinate (1-8)");
    cmd_ct->add_option("--seed", ct_seed, "rotation seed");
    cmd_ct->add_option("--group-dim", ct_group,
                       "group narrow rows up to this many coordinates before quantizing");
    cmd_ct->add_option("--out", ct_out, "output .tqkv path")->required();

    // decompress-tensor
    auto* cmd_dt = app.add_subcommand("decompress-tensor", "reconstruct a TQTN tensor from a TQKV container");
    std::string dt_in, dt_out;
    std::optional<int> dt_entry_dim;
    std::optional<uint64_t> dt_entry_count;
    cmd_dt->add_option("input", dt_in, "input .tqkv")->required();
    cmd_dt->add_option("--entry-dim", dt_entry_dim, "ungroup rows back to this entry width");
    cmd_dt->add_option("--entry-count", dt_entry_count, "original entry count before grouping");
    cmd_dt->add_option("--out", dt_out, "output .tqtn path")->required();

    // attn-eval
    auto* cmd_attn = app.add_subcommand("attn-eval", "exact vs quantized attention error harness");
    AttnArgs attn;
    cmd_attn->add_option("--dim", attn.dim, "key/value dimension");
    cmd_attn->add_option("--rows", attn.rows, "query rows");
    cmd_attn->add_option("--keys", attn.keys, "key rows (default: same as --rows)");
    cmd_attn->add_option("--bits", attn.bits, "bits per coordinate (1-8)");
    cmd_attn->add_option("--seed", attn.seed, "rotation and data seed");
    cmd_attn->add_option("--head-dim", attn.head_dim, "attention head size (scale = 1/sqrt)");
    auto* opt_k = cmd_attn->add_option("--k", attn.k_path, "key tensor (.tqtn)");
    auto* opt_v = cmd_attn->add_option("--v", attn.v_path, "value tensor (.tqtn)");
    cmd_attn->add_option("--q", attn.q_path, "query tensor (.tqtn)")->needs(opt_k)->needs(opt_v);
    cmd_attn->add_option("--format", attn.format, "json or csv");
    cmd_attn->add_option("--out", attn.out, "output path (default: stdout)");

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "measure unit-sphere distortion against the analytic bounds");
    int ev_dim = 45, ev_bits = 4;
    uint64_t ev_seed = 0, ev_trials = 10000;
    std::string ev_format = "json", ev_out;
    cmd_eval->add_option("--dim", ev_dim, "vector dimension")->required();
    cmd_eval->add_option("--bits", ev_bits, "bits per coordinate (1-8)");
    cmd_eval->add_option("--trials", ev_trials, "number of random unit vectors");
    cmd_eval->add_option("--seed", ev_seed, "sampling seed");
    cmd_eval->add_option("--format", ev_format, "json or csv");
    cmd_eval->add_option("--out", ev_out, "output path (default: stdout)");

    // ratio
    auto* cmd_ratio = app.add_subcommand("ratio", "compression ratio: closed-form estimate and exact accounting");
    int rt_dim = 45, rt_bits = 3;
    double rt_rho = 1.0, rt_r = 1.0;
    std::string rt_container, rt_original;
    cmd_ratio->add_option("--sh-dim", rt_dim, "SH coefficient count");
    cmd_ratio->add_option("--bits", rt_bits, "bits per coordinate (1-8)");
    cmd_ratio->add_option("--rho", rt_rho, "retained fraction after pruning");
    cmd_ratio->add_option("--sh-ratio", rt_r, "SH dimension reduction factor");
    auto* opt_orig = cmd_ratio->add_option("--original", rt_original,
                                           "original .ply for exact accounting");
    cmd_ratio->add_option("--container", rt_container, "measured .tq3d container")
        ->needs(opt_orig);

    try {
        app.parse(argc, argv);

        if (cmd_cb->parsed()) {
            tq::BetaCodebook cb = tq::solve_lloyd_max(cb_dim, cb_bits);
            tq::write_file_atomic(cb_out, std::span<const uint8_t>(tq::serialize_codebook(cb)));
            return 0;
        }

        if (cmd_cgs->parsed()) {
            tq::GaussianCloud cloud = tq::parse_ply(tq::read_file(cgs_in));
            if (cgs_prune) cloud = tq::prune_opacity(cloud, *cgs_prune);
            if (cgs_degree) cloud = tq::reduce_sh_degree(cloud, *cgs_degree);
            tq::CompressOptions opts;
            opts.embed_rotation = cgs_embed;
            tq::CompressedScene scene = tq::compress_cloud(cloud, cgs_bits, cgs_seed, opts);
            tq::write_file_atomic(cgs_out, std::span<const uint8_t>(tq::serialize_scene(scene)));
            return 0;
        }

        if (cmd_dgs->parsed()) {
            tq::CompressedScene scene = tq::parse_scene(tq::read_file(dgs_in));
            tq::GaussianCloud cloud = tq::decompress_cloud(scene);
            tq::write_file_atomic(dgs_out, std::span<const uint8_t>(tq::write_ply(cloud)));
            return 0;
        }

        if (cmd_pgs->parsed()) {
            tq::GaussianCloud cloud = tq::parse_ply(tq::read_file(pgs_in));
            if (pgs_prune) cloud = tq::prune_opacity(cloud, *pgs_prune);
            if (pgs_degree) cloud = tq::reduce_sh_degree(cloud, *pgs_degree);
            tq::write_file_atomic(pgs_out, std::span<const uint8_t>(tq::write_ply(cloud)));
            return 0;
        }

        if (cmd_ct->parsed()) {
            tq::TensorFile t = load_tensor(ct_in);
            tq::FloatMatrix table{t.rows(), t.row_dim(), std::move(t.data)};
            auto [grouped, meta] = tq::group_entries(table, ct_group);
            if (meta.group > 1) {
                std::cerr << "tq: grouped " << table.rows << " entries of width "
                          << meta.entry_dim << " in runs of " << meta.group << " ("
                          << meta.pad_count << " padded)\n";
            }
            tq::TensorFile flat;
            flat.dims = {static_cast<uint32_t>(grouped.rows),
                         static_cast<uint32_t>(grouped.cols)};
            flat.data = std::move(grouped.data);
            tq::CompressedTensor ct = tq::compress_tensor(flat, ct_bits, ct_seed);
            tq::write_file_atomic(ct_out,
                                  std::span<const uint8_t>(tq::serialize_tensor_container(ct)));
            return 0;
        }

        if (cmd_dt->parsed()) {
            tq::CompressedTensor ct = tq::parse_tensor_container(tq::read_file(dt_in));
            tq::TensorFile t = tq::decompress_tensor(ct);
            if (dt_entry_dim) {
                if (!dt_entry_count) {
                    throw tq::UsageError("--entry-dim requires --entry-count");
                }
                tq::GroupedTable meta;
                meta.entry_dim = *dt_entry_dim;
                meta.group = static_cast<int>(t.row_dim()) / *dt_entry_dim;
                meta.pad_count = t.rows() * meta.group - *dt_entry_count;
                tq::FloatMatrix grouped{t.rows(), t.row_dim(), std::move(t.data)};
                tq::FloatMatrix table = tq::ungroup_entries(grouped, meta, *dt_entry_count);
                t.dims = {static_cast<uint32_t>(table.rows),
                          static_cast<uint32_t>(table.cols)};
                t.data = std::move(table.data);
            }
            tq::write_file_atomic(dt_out, std::span<const uint8_t>(tq::write_tensor(t)));
            return 0;
        }

        if (cmd_attn->parsed()) {
            if (!attn.q_path.empty() && (attn.k_path.empty() || attn.v_path.empty())) {
                throw tq::UsageError("--q requires --k and --v");
            }
            return run_attn_eval(attn);
        }

        if (cmd_eval->parsed()) {
            tq::ReportFormat fmt = tq::report_format_from_name(ev_format);
            tq::DistortionReport rep =
                tq::measure_dmse(ev_dim, ev_bits, static_cast<std::size_t>(ev_trials), ev_seed);
            emit_text(tq::emit_report(std::span(&rep, 1), fmt), ev_out);
            return 0;
        }

        if (cmd_ratio->parsed()) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "formula: %.6g\n",
                          tq::approx_ratio(rt_rho, rt_bits, rt_r, rt_dim));
            std::string text = buf;
            if (!rt_container.empty()) {
                tq::CompressedScene scene = tq::parse_scene(tq::read_file(rt_container));
                std::size_t original = tq::read_file(rt_original).size();
                std::snprintf(buf, sizeof(buf), "exact: %.6g\n",
                              tq::exact_ratio(scene, original));
                text += buf;
            }
            std::cout << text;
            return 0;
        }

        throw tq::UsageError("no subcommand given");
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const tq::UsageError& e) {
        std::cerr << "tq: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "tq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
