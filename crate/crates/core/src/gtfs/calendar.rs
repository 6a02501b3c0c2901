use std::collections::BTreeSet;

use chrono::NaiveDate;

use super::Feed;

/// Trip ids whose service runs on `date`, after calendar exceptions.
///
/// Dates outside every calendar span simply yield an empty set.
pub fn service_on_date(feed: &Feed, date: NaiveDate) -> BTreeSet<String> {
    feed.trips
        .values()
        .filter(|t| feed.services.get(&t.service_id).is_some_and(|s| s.is_active(date)))
        .map(|t| t.id.clone())
        .collect()
}

/// Every date on which at least one of `service_ids` is active.
pub fn service_dates<'a>(feed: &Feed, service_ids: impl IntoIterator<Item = &'a str>) -> BTreeSet<NaiveDate> {
    let mut out = BTreeSet::new();
    for id in service_ids {
        let Some(s) = feed.services.get(id) else { continue };
        out.extend(s.added.iter().copied());
        if let Some(w) = &s.weekly {
            out.extend(w.start.iter_days().take_while(|d| *d <= w.end).filter(|d| s.is_active(*d)));
        }
    }
    out
}
