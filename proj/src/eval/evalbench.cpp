// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "eval/evalbench.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace geode {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

constexpr std::array<TaskKind, 7> kCsvTasks = {
    TaskKind::ObjCount, TaskKind::AbsDist, TaskKind::ObjSize,  TaskKind::RoomSize,
    TaskKind::RelDist,  TaskKind::RelDir,  TaskKind::AppearOrder};

}  // namespace

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    const int n = static_cast<int>(text.size());
    int i = 0;
    while (i < n) {
        int j = i;
        bool neg = false;
        if (text[j] == '-') {
            neg = true;
            ++j;
        }
        const int start = j;
        while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j > start && j + 2 < n && text[j] == '.' &&
            std::isdigit(static_cast<unsigned char>(text[j + 1])) &&
            std::isdigit(static_cast<unsigned char>(text[j + 2]))) {
            const int from = neg ? i : start;
            out.push_back(std::stod(text.substr(from, j + 3 - from)));
            i = j + 3;
        } else {
            i = j > start ? j : i + 1;
        }
    }
    return out;
}

void EvalReport::finalize() {
    task_score.fill(0.0);
    task_count.fill(0);
    samples = static_cast<int>(per_sample.size());
    unparseable = 0;
    excluded = 0;
    double na_sum = 0, mca_sum = 0;
    int na_n = 0, mca_n = 0;
    for (const SampleScore& s : per_sample) {
        if (s.excluded) {
            ++excluded;
            continue;
        }
        if (!s.parseable) ++unparseable;
        const int t = static_cast<int>(s.task);
        task_score[t] += s.score;
        ++task_count[t];
        if (s.numerical) {
            na_sum += s.score;
            ++na_n;
        } else {
            mca_sum += s.score;
            ++mca_n;
        }
    }
    for (int t = 0; t < 8; ++t)
        if (task_count[t] > 0) task_score[t] /= task_count[t];
    double sum = 0;
    int n_tasks = 0;
    for (TaskKind t : kCsvTasks) {
        if (task_count[static_cast<int>(t)] == 0) continue;
        sum += task_score[static_cast<int>(t)];
        ++n_tasks;
    }
    overall = n_tasks > 0 ? sum / n_tasks : 0.0;
    na_mean = na_n > 0 ? na_sum / na_n : 0.0;
    mca_mean = mca_n > 0 ? mca_sum / mca_n : 0.0;
    const int scored = samples - excluded;
    unparseable_rate = scored > 0 ? static_cast<double>(unparseable) / scored : 0.0;
}

json EvalReport::to_json() const {
    json per_task = json::object();
    for (int t = 0; t < 8; ++t)
        per_task[task_name(static_cast<TaskKind>(t))] =
            json{{"score", task_score[t]}, {"count", task_count[t]}};
    return json{{"arm", arm},
                {"seed", seed},
                {"overall", overall},
                {"na_mean", na_mean},
                {"mca_mean", mca_mean},
                {"unparseable_rate", unparseable_rate},
                {"samples", samples},
                {"excluded", excluded},
                {"warnings", warnings},
                {"locate_center_err", locate_count > 0 ? locate_center_err : 0.0},
                {"locate_count", locate_count},
                {"per_task", per_task}};
}

std::string csv_header() {
    return "arm,seed,overall,obj_count,abs_dist,obj_size,room_size,rel_dist,rel_dir,"
           "appear_order,na_mean,mca_mean,unparseable_rate";
}

std::string csv_row(const EvalReport& r) {
    std::ostringstream os;
    os << r.arm << "," << r.seed << "," << fmt6(r.overall);
    for (TaskKind t : kCsvTasks) os << "," << fmt6(r.task_score[static_cast<int>(t)]);
    os << "," << fmt6(r.na_mean) << "," << fmt6(r.mca_mean) << ","
       << fmt6(r.unparseable_rate);
    return os.str();
}

DecodedAnswer decode_answer(const ParamStore& store, const ModelConfigs& mc, const Vocab& vocab,
                            const QASample& qa, const GenerateResult& gen, int prefix_rows,
                            int prompt_len, bool drh_mode, const NormStats& norm) {
    DecodedAnswer ans;
    int first_control = -1;
    for (size_t k = 0; k < gen.ids.size(); ++k) {
        if (vocab.is_control(gen.ids[k])) {
            ++ans.control_tokens;
            if (first_control < 0) first_control = static_cast<int>(k);
        }
    }
    if (drh_mode && first_control >= 0) {
        const int id = gen.ids[first_control];
        const HeadKind expected = head_for_task(qa.task);
        const bool matches = (id == vocab.reg() && expected == HeadKind::Scalar) ||
                             (id == vocab.bbox() && expected == HeadKind::Box);
        if (matches) {
            NoGradGuard ng;
            const int row = prefix_rows + prompt_len + first_control;
            Tensor hidden_row = slice_rows(gen.hidden, row, row + 1);
            Tensor pred = drh_regress(store, mc.drh, hidden_row, qa.task);
            if (expected == HeadKind::Box) {
                ans.kind = DecodedAnswer::Kind::Box;
                ans.box = denormalize_box(pred.data(), norm);
            } else {
                ans.kind = DecodedAnswer::Kind::Scalar;
                ans.scalar = denormalize_scalar(pred.item(), qa.task, norm);
            }
            return ans;
        }
        return ans;  // control token for the wrong head: unparseable
    }

    // text path
    if (qa.answer_kind == AnswerKind::Mca) {
        for (int id : gen.ids) {
            const std::string& t = vocab.token(id);
            if (t.size() == 1 && t[0] >= 'A' && t[0] <= 'D') {
                ans.kind = DecodedAnswer::Kind::Choice;
                ans.choice = t;
                return ans;
            }
        }
        return ans;
    }
    std::vector<int> text_ids;
    for (int id : gen.ids)
        if (!vocab.is_control(id)) text_ids.push_back(id);
    const std::string text = vocab.detokenize(text_ids);
    // the generated text ends with the answer after the worked rationale,
    // so the trailing number(s) are the model's final value
    if (qa.answer_kind == AnswerKind::Box7) {
        std::vector<double> nums = parse_numbers(text);
        if (nums.size() >= 7) {
            ans.kind = DecodedAnswer::Kind::Box;
            ans.box.assign(nums.end() - 7, nums.end());
        }
        return ans;
    }
    std::vector<double> nums = parse_numbers(text);
    if (!nums.empty()) {
        ans.kind = DecodedAnswer::Kind::Scalar;
        ans.scalar = nums.back();
    }
    return ans;
}

EvalReport run_eval(const ParamStore& store, const ModelConfigs& mc, const Vocab& vocab,
                    const Dataset& ds, const NormStats& norm, int n_frames, Arm arm,
                    int max_new_tokens) {
    EvalReport report;
    report.arm = arm_name(arm);
    double locate_err_sum = 0;
    for (const QASample& qa : ds.samples) {
        const SceneAssets& assets = ds.assets_for(qa);
        Tensor prefix;
        {
            NoGradGuard ng;
            prefix = build_prefix(store, mc, assets, n_frames, arm_uses_drm(arm));
        }
        std::vector<int> prompt;
        prompt.push_back(vocab.bos());
        for (int id : vocab.tokenize(qa.question)) prompt.push_back(id);
        GenerateResult gen =
            lm_generate(store, mc.lm, prefix, prompt, vocab, max_new_tokens);
        DecodedAnswer ans =
            decode_answer(store, mc, vocab, qa, gen, prefix.rows(),
                          static_cast<int>(prompt.size()), arm_uses_drh(arm), norm);
        if (ans.control_tokens > 1) ++report.warnings;

        SampleScore s;
        s.task = qa.task;
        if (qa.task == TaskKind::Locate) {
            s.excluded = true;  // tracked separately, not part of overall
            if (ans.kind == DecodedAnswer::Kind::Box && qa.target_box) {
                const double dx = ans.box[0] - (*qa.target_box)[0];
                const double dy = ans.box[1] - (*qa.target_box)[1];
                const double dz = ans.box[2] - (*qa.target_box)[2];
                locate_err_sum += std::sqrt(dx * dx + dy * dy + dz * dz);
                ++report.locate_count;
            }
            report.per_sample.push_back(s);
            continue;
        }
        if (qa.answer_kind == AnswerKind::Mca) {
            s.numerical = false;
            s.parseable = ans.kind == DecodedAnswer::Kind::Choice;
            s.score = s.parseable ? score_mca(ans.choice, qa.answer_text) : 0.0;
        } else {
            s.numerical = true;
            if (!qa.target_scalar || *qa.target_scalar <= 0) {
                s.excluded = true;
                ++report.warnings;
                report.per_sample.push_back(s);
                continue;
            }
            s.parseable = ans.kind == DecodedAnswer::Kind::Scalar;
            double pred = ans.scalar;
            if (qa.task == TaskKind::ObjCount) pred = std::round(pred);
            s.score = s.parseable ? score_na(pred, *qa.target_scalar) : 0.0;
        }
        report.per_sample.push_back(s);
    }
    report.finalize();
    report.locate_center_err =
        report.locate_count > 0 ? locate_err_sum / report.locate_count : 0.0;
    return report;
}

namespace {

ParamStore load_eval_store(const json& cfg, const Vocab& vocab, const ModelConfigs& mc,
                           const std::string& checkpoint) {
    ParamStore store;
    Rng rng(cfg.at("seed").get<uint64_t>() + 0x52ull);
    init_lm_params(store, mc.lm, vocab, rng);
    init_encoder_params(store, mc.enc, rng);
    init_drm_params(store, mc.drm, rng);
    init_drh_params(store, mc.drh, rng);
    store.create("proj2d.w", Tensor::randn({mc.lm.d_model, mc.lm.d_model}, rng, 0.08));
    store.create("proj2d.b", Tensor::zeros({1, mc.lm.d_model}));
    load_checkpoint(checkpoint, store);
    return store;
}

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write file: " + path);
    os << text;
}

}  // namespace

void cmd_eval(const json& cfg) {
    const json& e = cfg.at("eval");
    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    Dataset ds = load_dataset(e.at("data_dir"));
    const NormStats norm = NormStats::from_json(ds.manifest.at("norm"));
    const Arm arm = arm_from_string(e.at("arm"));
    ParamStore store = load_eval_store(cfg, vocab, mc, e.at("checkpoint"));

    EvalReport report = run_eval(store, mc, vocab, ds, norm, e.at("n_frames"), arm,
                                 e.at("max_new_tokens"));
    report.seed = cfg.at("seed").get<uint64_t>();
    write_text(e.at("out_csv"), csv_header() + "\n" + csv_row(report) + "\n");
    write_text(e.at("report_json"), report.to_json().dump(2) + "\n");
}

void cmd_ablate(const json& cfg) {
    const json& a = cfg.at("ablate");
    const std::string out_dir = a.at("out_dir");
    fs::create_directories(out_dir);

    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    Dataset eval_ds = load_dataset(a.at("eval_data_dir"));
    const NormStats norm = NormStats::from_json(eval_ds.manifest.at("norm"));

    std::vector<Arm> arms;
    for (const auto& name : a.at("arms")) arms.push_back(arm_from_string(name));
    const bool need_stage1 =
        std::any_of(arms.begin(), arms.end(), [](Arm x) { return arm_uses_drm(x); });

    std::ostringstream csv;
    csv << csv_header() << "\n";
    for (const auto& seed_j : a.at("seeds")) {
        const uint64_t seed = seed_j.get<uint64_t>();
        json run = cfg;
        run["seed"] = seed;
        const std::string s1_out = out_dir + "/stage1_seed" + std::to_string(seed) + ".geod";
        if (need_stage1) {
            run["stage1"]["data_dir"] = a.at("train_data_dir");
            run["stage1"]["lm_checkpoint"] = a.at("lm_checkpoint");
            run["stage1"]["out"] = s1_out;
            run["stage1"]["metrics"] =
                out_dir + "/stage1_seed" + std::to_string(seed) + "_metrics.jsonl";
            cmd_train_stage1(run);
        }
        for (Arm arm : arms) {
            const std::string tag = std::string(arm_name(arm)) + "_seed" + std::to_string(seed);
            run["stage2"]["arm"] = arm_name(arm);
            run["stage2"]["data_dir"] = a.at("train_data_dir");
            run["stage2"]["lm_checkpoint"] = a.at("lm_checkpoint");
            run["stage2"]["stage1_checkpoint"] = s1_out;
            run["stage2"]["out"] = out_dir + "/" + tag + ".geod";
            run["stage2"]["metrics"] = out_dir + "/" + tag + "_metrics.jsonl";
            cmd_train_stage2(run);

            ParamStore store = load_eval_store(run, vocab, mc, out_dir + "/" + tag + ".geod");
            EvalReport report =
                run_eval(store, mc, vocab, eval_ds, norm, cfg.at("eval").at("n_frames"), arm,
                         cfg.at("eval").at("max_new_tokens"));
            report.seed = seed;
            csv << csv_row(report) << "\n";
        }
    }
    write_text(a.at("out_csv"), csv.str());
    write_text(out_dir + "/config_resolved.json", cfg.dump(2) + "\n");
}

void cmd_report(const json& cfg) {
    const json& r = cfg.at("report");
    int warnings = 0;
    // rows keyed by arm: per numeric column, list of values across seeds
    std::map<std::string, std::map<std::string, std::vector<double>>> groups;
    std::vector<std::string> columns;
    std::ostringstream notes;

    for (const auto& input_j : r.at("inputs")) {
        const std::string input = input_j.get<std::string>();
        std::ifstream is(input);
        if (!is) throw IoError("cannot read report input: " + input);
        std::string line;
        int lineno = 0;
        std::vector<std::string> header;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty()) continue;
            if (input.size() > 6 && input.substr(input.size() - 6) == ".jsonl") {
                try {
                    json j = json::parse(line);
                    for (auto it = j.begin(); it != j.end(); ++it)
                        if (it->is_number()) groups["metrics"][it.key()].push_back(*it);
                } catch (const json::parse_error&) {
                    ++warnings;
                    notes << "warning: " << input << ":" << lineno
                          << ": malformed JSONL line skipped\n";
                }
                continue;
            }
            std::vector<std::string> cells;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (header.empty()) {
                header = cells;
                if (columns.empty()) columns.assign(header.begin() + 2, header.end());
                continue;
            }
            if (cells.size() != header.size()) {
                ++warnings;
                notes << "warning: " << input << ":" << lineno << ": malformed row skipped\n";
                continue;
            }
            for (size_t c = 2; c < cells.size(); ++c) {
                try {
                    groups[cells[0]][header[c]].push_back(std::stod(cells[c]));
                } catch (const std::exception&) {
                    ++warnings;
                    notes << "warning: " << input << ":" << lineno
                          << ": non-numeric cell skipped\n";
                }
            }
        }
    }

    std::ostringstream text, out_csv;
    text << "benchmark summary (mean +/- std across seeds)\n";
    out_csv << "arm,column,mean,std,n\n";
    for (const auto& [arm, cols] : groups) {
        text << "\n[" << arm << "]\n";
        for (const auto& [col, vals] : cols) {
            double mean = 0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            std::string std_text;
            double sd = 0;
            if (vals.size() > 1) {
                for (double v : vals) sd += (v - mean) * (v - mean);
                sd = std::sqrt(sd / (vals.size() - 1));
                std_text = fmt6(sd);
            }
            char buf[160];
            std::snprintf(buf, sizeof(buf), "  %-18s %10s %s%s\n", col.c_str(),
                          fmt6(mean).c_str(), std_text.empty() ? "" : "+/- ",
                          std_text.c_str());
            text << buf;
            out_csv << arm << "," << col << "," << fmt6(mean) << "," << std_text << ","
                    << vals.size() << "\n";
        }
    }
    if (warnings > 0) text << "\nwarnings: " << warnings << "\n" << notes.str();
    const std::string out = r.at("out");
    write_text(out, text.str());
    write_text(out + ".csv", out_csv.str());
}

}  // namespace geode
