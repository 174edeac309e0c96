//! The long planning context handed to strategist and planner.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Poi, TravelerProfile};
use crate::spatial::{cluster_label, BearingResult, ClusterRoute};

pub const EMPTY_SECTION: &str = "(none)";

pub const SECTION_TITLES: [&str; 5] = [
    "User Profile & Preferences",
    "Hotel Information",
    "POI Blog Posts",
    "Intra-cluster Shortest Routes",
    "Inter-cluster Directions from the Hotel",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub profile_text: String,
    pub hotel_info: String,
    pub poi_posts: String,
    pub intra_cluster_info: String,
    pub inter_cluster_info: String,
}

/// A blog post about one POI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiPost {
    pub poi_id: String,
    pub poi_name: String,
    pub text: String,
}

fn or_empty(text: String) -> String {
    if text.trim().is_empty() {
        EMPTY_SECTION.to_string()
    } else {
        text.trim_end().to_string()
    }
}

impl ContextDocument {
    pub fn sections(&self) -> [(&'static str, &str); 5] {
        [
            (SECTION_TITLES[0], self.profile_text.as_str()),
            (SECTION_TITLES[1], self.hotel_info.as_str()),
            (SECTION_TITLES[2], self.poi_posts.as_str()),
            (SECTION_TITLES[3], self.intra_cluster_info.as_str()),
            (SECTION_TITLES[4], self.inter_cluster_info.as_str()),
        ]
    }

    pub fn render(&self) -> String {
        self.sections()
            .iter()
            .map(|(title, body)| format!("## {title}\n\n{body}\n"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn assemble_context(
    profile: &TravelerProfile,
    hotel: &Poi,
    posts: &[PoiPost],
    routes: &[ClusterRoute],
    bearings: &[BearingResult],
) -> ContextDocument {
    let mut hotel_info = format!(
        "{} (id: {}), at {:.5}, {:.5}",
        hotel.name, hotel.id, hotel.location.lat, hotel.location.lon
    );
    if let Some(excerpt) = &hotel.blog_excerpt {
        let _ = write!(hotel_info, "\n{}", excerpt.trim());
    }

    let mut poi_posts = String::new();
    for post in posts {
        let _ = writeln!(
            poi_posts,
            "### {} (id: {})\n{}\n",
            post.poi_name,
            post.poi_id,
            post.text.trim()
        );
    }

    let mut intra = String::new();
    for r in routes {
        let mut line = format!(
            "{}: {}",
            cluster_label(r.cluster),
            r.route.path.first().map(String::as_str).unwrap_or("")
        );
        for (next, d) in r.route.path.iter().skip(1).zip(&r.route.step_distances) {
            let _ = write!(line, " -> {next} ({d:.2} km)");
        }
        let _ = writeln!(intra, "{line}; total {:.2} km", r.route.total_distance);
    }

    let mut inter = String::new();
    for b in bearings {
        let _ = writeln!(
            inter,
            "{}: {} of the hotel, {:.2} km",
            b.target,
            b.direction.as_str(),
            b.distance_km
        );
    }

    ContextDocument {
        profile_text: or_empty(profile.describe()),
        hotel_info: or_empty(hotel_info),
        poi_posts: or_empty(poi_posts),
        intra_cluster_info: or_empty(intra),
        inter_cluster_info: or_empty(inter),
    }
}
