//! Applies category intensities and a per-post override to one page.

use mediator::curator::{curate_feed, CurationPolicy};
use mediator::model::OverrideAction;
use mediator::{PostContent, UserConfig};

fn main() {
    let page = vec![
        PostContent::new("a", "club", "sports", "Late winner in the derby."),
        PostContent::new("b", "desk", "news", "Budget vote moved to Thursday."),
        PostContent::new("c", "chef", "food", "Three soups for cold evenings."),
        PostContent::new("d", "troll", "news", "Everyone is wrong but me."),
    ];
    let policy = CurationPolicy::from_config(&UserConfig::default())
        .with_intensity("sports", 0.0)
        .with_intensity("food", 1.0)
        .with_override("d", OverrideAction::MuteAuthor);
    let feed = curate_feed(&page, &policy);
    for v in &feed.visible {
        println!("show {} ({:.2})", v.post_id, v.visibility_score);
    }
    for h in &feed.hidden {
        println!("hide {}: {}", h.post_id, h.explanation);
    }
}
