/// Lowercase ASCII words of letters and digits joined by single hyphens.
pub fn is_kebab_case(s: &str) -> bool {
    !s.is_empty()
        && s.split('-').all(|part| {
            !part.is_empty()
                && part
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
        })
}

#[cfg(test)]
mod tests {
    use super::is_kebab_case;

    #[test]
    fn kebab_case() {
        for ok in ["service-order-manager", "dp074", "a", "four-eyes-principle", "api-v2"] {
            assert!(is_kebab_case(ok), "{ok}");
        }
        for bad in [
            "",
            "ServiceOrderManager",
            "service_order",
            "-lead",
            "trail-",
            "double--hyphen",
            "with space",
            "ünïcode",
        ] {
            assert!(!is_kebab_case(bad), "{bad}");
        }
    }
}
