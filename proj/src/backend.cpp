#include "privloc/backend.hpp"

#include <algorithm>
#include <filesystem>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "privloc/clip.hpp"
#include "privloc/error.hpp"

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace privloc {

namespace {

using BPoint = bg::model::point<std::int64_t, 2, bg::cs::cartesian>;
using BBox = bg::model::box<BPoint>;
using RValue = std::pair<BBox, std::uint32_t>;

constexpr std::int64_t kGridCells = 16;

bool hits(const EncryptedSegment& s, const EncryptedRect& r) {
  return segment_intersects_rect(s.p0.ex, s.p0.ey, s.p1.ex, s.p1.ey, r.sw.ex, r.sw.ey,
                                 r.ne.ex, r.ne.ey);
}

}  // namespace

IndexKind parse_index_kind(std::string_view s) {
  if (s == "grid") return IndexKind::grid;
  if (s == "rtree") return IndexKind::rtree;
  throw Error(ErrorCode::config, "index: expected grid or rtree, got '" + std::string(s) + "'");
}

struct SpatialIndex::Entry {
  EncryptedRect rect;
  SlotKey slot{};
  bool live = false;
};

// In-slot sub-index. Grid cells are fixed-size squares anchored at the slot
// origin; a box is listed in every cell it overlaps.
struct SpatialIndex::Slot {
  std::size_t count = 0;
  std::vector<std::vector<std::uint32_t>> cells;
  bgi::rtree<RValue, bgi::quadratic<16>> rtree;
};

std::size_t SpatialIndex::SlotHash::operator()(const SlotKey& k) const noexcept {
  const std::uint64_t h = static_cast<std::uint64_t>(k.sx) * 0x9e3779b97f4a7c15ULL ^
                          static_cast<std::uint64_t>(k.sy);
  return static_cast<std::size_t>(h ^ (h >> 29));
}

SpatialIndex::SpatialIndex(std::int64_t slot_width, IndexKind kind)
    : slot_width_(slot_width), kind_(kind) {
  if (slot_width < 1) throw Error(ErrorCode::config, "slot_width: must be >= 1");
#ifdef NDEBUG
  verify_ = false;
#else
  verify_ = true;
#endif
}

SpatialIndex::~SpatialIndex() = default;

SpatialIndex::SlotKey SpatialIndex::slot_of(const EncryptedPoint& p) const {
  return {p.ex / slot_width_, p.ey / slot_width_};
}

bool SpatialIndex::well_formed(const EncryptedRect& r) const {
  return !r.part_id.empty() && r.sw.ex >= 0 && r.sw.ey >= 0 && r.sw.ex <= r.ne.ex &&
         r.sw.ey <= r.ne.ey && slot_of(r.sw) == slot_of(r.ne);
}

namespace {

struct CellRange {
  std::int64_t x0, x1, y0, y1;
};

std::int64_t grid_side(std::int64_t w) { return std::min(w, kGridCells); }

std::int64_t cell_size(std::int64_t w) { return (w + grid_side(w) - 1) / grid_side(w); }

CellRange cells_of(std::int64_t w, std::int64_t ox, std::int64_t oy, std::int64_t xmin,
                   std::int64_t ymin, std::int64_t xmax, std::int64_t ymax) {
  const std::int64_t c = cell_size(w);
  return {(xmin - ox) / c, (xmax - ox) / c, (ymin - oy) / c, (ymax - oy) / c};
}

}  // namespace

InsertResult SpatialIndex::insert(const std::vector<EncryptedRect>& batch) {
  InsertResult res;
  std::vector<const EncryptedRect*> good;
  good.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (well_formed(batch[i]))
      good.push_back(&batch[i]);
    else
      res.rejected.push_back(batch[i].part_id.empty() ? "#" + std::to_string(i)
                                                      : batch[i].part_id);
  }

  std::unique_lock lock(mu_);
  const std::int64_t g = grid_side(slot_width_);
  for (const EncryptedRect* r : good) {
    if (auto it = by_id_.find(r->part_id); it != by_id_.end()) remove_locked(it->second);
    std::uint32_t h;
    if (!free_.empty()) {
      h = free_.back();
      free_.pop_back();
    } else {
      h = static_cast<std::uint32_t>(entries_.size());
      entries_.emplace_back();
    }
    Entry& e = entries_[h];
    e.rect = *r;
    e.slot = slot_of(r->sw);
    e.live = true;
    by_id_[r->part_id] = h;

    auto& slot = slots_[e.slot];
    if (!slot) {
      slot = std::make_unique<Slot>();
      if (kind_ == IndexKind::grid) slot->cells.resize(static_cast<std::size_t>(g * g));
    }
    ++slot->count;
    if (kind_ == IndexKind::grid) {
      const CellRange cr = cells_of(slot_width_, e.slot.sx * slot_width_, e.slot.sy * slot_width_,
                                    r->sw.ex, r->sw.ey, r->ne.ex, r->ne.ey);
      for (std::int64_t cy = cr.y0; cy <= cr.y1; ++cy)
        for (std::int64_t cx = cr.x0; cx <= cr.x1; ++cx)
          slot->cells[static_cast<std::size_t>(cy * g + cx)].push_back(h);
    } else {
      slot->rtree.insert({BBox{{r->sw.ex, r->sw.ey}, {r->ne.ex, r->ne.ey}}, h});
    }
    ++res.inserted;
  }
  return res;
}

void SpatialIndex::remove_locked(std::uint32_t h) {
  Entry& e = entries_[h];
  auto sit = slots_.find(e.slot);
  Slot& slot = *sit->second;
  if (kind_ == IndexKind::grid) {
    const std::int64_t g = grid_side(slot_width_);
    const EncryptedRect& r = e.rect;
    const CellRange cr = cells_of(slot_width_, e.slot.sx * slot_width_, e.slot.sy * slot_width_,
                                  r.sw.ex, r.sw.ey, r.ne.ex, r.ne.ey);
    for (std::int64_t cy = cr.y0; cy <= cr.y1; ++cy) {
      for (std::int64_t cx = cr.x0; cx <= cr.x1; ++cx) {
        auto& cell = slot.cells[static_cast<std::size_t>(cy * g + cx)];
        auto it = std::find(cell.begin(), cell.end(), h);
        if (it != cell.end()) {
          *it = cell.back();
          cell.pop_back();
        }
      }
    }
  } else {
    slot.rtree.remove(RValue{BBox{{e.rect.sw.ex, e.rect.sw.ey}, {e.rect.ne.ex, e.rect.ne.ey}}, h});
  }
  if (--slot.count == 0) slots_.erase(sit);
  by_id_.erase(e.rect.part_id);
  e = Entry{};
  free_.push_back(h);
}

std::size_t SpatialIndex::erase(const std::vector<PartId>& ids) {
  std::unique_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& id : ids) {
    if (auto it = by_id_.find(id); it != by_id_.end()) {
      remove_locked(it->second);
      ++n;
    }
  }
  return n;
}

std::vector<PartId> SpatialIndex::query(const EncryptedSegment& seg) const {
  if (seg.p0.ex < 0 || seg.p0.ey < 0 || seg.p1.ex < 0 || seg.p1.ey < 0)
    throw Error(ErrorCode::protocol, "negative encrypted coordinate");
  const SlotKey key = slot_of(seg.p0);
  if (!(key == slot_of(seg.p1)))
    throw Error(ErrorCode::protocol, "segment endpoints lie in different slots");

  std::vector<PartId> out;
  {
    std::shared_lock lock(mu_);
    auto sit = slots_.find(key);
    if (sit != slots_.end()) {
      const Slot& slot = *sit->second;
      const std::int64_t xmin = std::min(seg.p0.ex, seg.p1.ex);
      const std::int64_t xmax = std::max(seg.p0.ex, seg.p1.ex);
      const std::int64_t ymin = std::min(seg.p0.ey, seg.p1.ey);
      const std::int64_t ymax = std::max(seg.p0.ey, seg.p1.ey);
      std::vector<std::uint32_t> cand;
      if (kind_ == IndexKind::grid) {
        const std::int64_t g = grid_side(slot_width_);
        const std::int64_t c = cell_size(slot_width_);
        const std::int64_t ox = key.sx * slot_width_, oy = key.sy * slot_width_;
        const CellRange cr = cells_of(slot_width_, ox, oy, xmin, ymin, xmax, ymax);
        for (std::int64_t cy = cr.y0; cy <= cr.y1; ++cy) {
          for (std::int64_t cx = cr.x0; cx <= cr.x1; ++cx) {
            const auto& cell = slot.cells[static_cast<std::size_t>(cy * g + cx)];
            if (cell.empty()) continue;
            // The segment is continuous, so a cell spans the real square
            // [x0, x0 + c]; boxes crossing into it are listed there too.
            const std::int64_t x0 = ox + cx * c, y0 = oy + cy * c;
            if (!segment_intersects_rect(seg.p0.ex, seg.p0.ey, seg.p1.ex, seg.p1.ey, x0, y0,
                                         x0 + c, y0 + c))
              continue;
            cand.insert(cand.end(), cell.begin(), cell.end());
          }
        }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      } else {
        for (auto it = slot.rtree.qbegin(bgi::intersects(BBox{{xmin, ymin}, {xmax, ymax}}));
             it != slot.rtree.qend(); ++it)
          cand.push_back(it->second);
      }
      for (std::uint32_t h : cand)
        if (hits(seg, entries_[h].rect)) out.push_back(entries_[h].rect.part_id);
    }
  }
  std::sort(out.begin(), out.end());
  if (verify_ && out != scan(seg))
    throw Error(ErrorCode::internal, "index result differs from linear scan");
  return out;
}

std::vector<PartId> SpatialIndex::scan(const EncryptedSegment& seg) const {
  std::vector<PartId> out;
  {
    std::shared_lock lock(mu_);
    for (const auto& e : entries_)
      if (e.live && hits(seg, e.rect)) out.push_back(e.rect.part_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t SpatialIndex::size() const {
  std::shared_lock lock(mu_);
  return by_id_.size();
}

std::size_t SpatialIndex::slot_count() const {
  std::shared_lock lock(mu_);
  return slots_.size();
}

// ---- service ----------------------------------------------------------------

BackendService::BackendService(const BackendOptions& opts)
    : opts_(opts), index_(opts.slot_width, opts.index) {
  index_.set_verify(opts.verify);
  if (!opts_.data_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts_.data_dir, ec);
    if (ec) throw Error(ErrorCode::io, "data-dir: " + ec.message());
    replay();
    log_.open(std::filesystem::path(opts_.data_dir) / "backend.log", std::ios::app);
    if (!log_) throw Error(ErrorCode::io, "data-dir: cannot open log for append");
  }
}

void BackendService::replay() {
  std::ifstream in(std::filesystem::path(opts_.data_dir) / "backend.log");
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    // A torn final line from a crash is skipped.
    if (j.is_discarded() || !j.is_object()) continue;
    try {
      const std::string op = wire::require_string(j, "op");
      const auto& body = wire::require(j, "body");
      if (op == wire::type::insert_parts)
        index_.insert(wire::insert_parts_from(body).parts);
      else if (op == wire::type::delete_parts)
        index_.erase(wire::delete_parts_from(body).part_ids);
    } catch (const Error&) {
    }
  }
}

void BackendService::append_log(std::string_view op, const nlohmann::json& body) {
  if (!log_.is_open()) return;
  std::lock_guard lock(log_mu_);
  log_ << nlohmann::json{{"op", op}, {"body", body}}.dump() << '\n';
  log_.flush();
}

wire::Envelope BackendService::handle(const wire::Envelope& req) {
  bool malformed = false;
  return dispatch(req, malformed);
}

wire::Envelope BackendService::dispatch(const wire::Envelope& req, bool& malformed) {
  const auto fail = [&](const Error& e) {
    return wire::make_error(req.id, error_code_name(e.code()), e.what());
  };
  if (!opts_.auth.empty() && req.auth != opts_.auth)
    return wire::make_error(req.id, error_code_name(ErrorCode::unauthorized), "bad token");
  try {
    if (req.type == wire::type::insert_parts) {
      wire::InsertParts msg;
      try {
        msg = wire::insert_parts_from(req.body);
      } catch (const Error& e) {
        malformed = true;
        return fail(e);
      }
      const InsertResult r = index_.insert(msg.parts);
      append_log(req.type, req.body);
      return wire::make_ack(req.id, {{"inserted", r.inserted}, {"rejected", r.rejected}});
    }
    if (req.type == wire::type::query_segment) {
      wire::QuerySegment msg;
      try {
        msg = wire::query_segment_from(req.body);
      } catch (const Error& e) {
        malformed = true;
        return fail(e);
      }
      return wire::make_ack(req.id, {{"part_ids", index_.query(msg.seg)}});
    }
    if (req.type == wire::type::delete_parts) {
      wire::DeleteParts msg;
      try {
        msg = wire::delete_parts_from(req.body);
      } catch (const Error& e) {
        malformed = true;
        return fail(e);
      }
      const std::size_t n = index_.erase(msg.part_ids);
      append_log(req.type, req.body);
      return wire::make_ack(req.id, {{"deleted", n}});
    }
    return wire::make_error(req.id, error_code_name(ErrorCode::protocol),
                            "unsupported message type '" + req.type + "'");
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return wire::make_error(req.id, error_code_name(ErrorCode::internal), e.what());
  }
}

net::Reply BackendService::handle(std::string_view line) {
  wire::Envelope req;
  try {
    req = wire::decode(line);
  } catch (const Error& e) {
    return {wire::encode(wire::make_error(0, error_code_name(e.code()), e.what())), true};
  }
  bool malformed = false;
  const wire::Envelope rep = dispatch(req, malformed);
  return {wire::encode(rep), malformed};
}

}  // namespace privloc
